//! Writes a small synthetic corpus for trying the command-line tool:
//!
//! ```text
//! cargo run --example synth_corpus -- demo
//! cargo run --bin noisy-offense -- run --input-a demo/a.tsv --input-b demo/b.tsv \
//!     --test demo/test.tsv --s-low 0.1 --s-high 0.2 --seed 1 --out-dir demo/out
//! ```

#[path = "../tests/common/synth.rs"]
mod synth;

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "demo".into());
    std::fs::create_dir_all(&dir).expect("create output directory");
    let world = synth::NoisyWorld::generate(4_000, 300, 1_000, 1);
    let (a, b, t) = world.write(std::path::Path::new(&dir));
    println!("{}\n{}\n{}", a.display(), b.display(), t.display());
}
