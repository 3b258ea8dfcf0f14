//! Code-only and code-description token sequences, the shared vocabulary and
//! fixed-length integer encoding.
//!
//! cargo run --example representation

use repocat::corpus::FunctionRecord;
use repocat::repr::{build_representation, encode, Variant, Vocabulary};

fn main() -> repocat::Result<()> {
    let function = FunctionRecord::new(
        "ALSA-Mixer",
        "setVolume",
        "int setVolume(struct mixer *m, int level) { m->gain = level_to_db(level); return 0; }",
    )?;
    let description = Some("Console sound mixer for the ALSA driver");

    let co = build_representation(&function, description, Variant::Co);
    let cd = build_representation(&function, description, Variant::Cd);
    println!("co: {}", co.join(" "));
    println!("cd: {}", cd.join(" "));

    let vocab = Vocabulary::build([cd.clone()])?;
    println!("{} tokens, hash {}", vocab.len(), &vocab.hash()[..12]);

    let ids = encode(&cd, &vocab, 24)?;
    println!("ids: {ids:?}");
    let unseen = build_representation(&FunctionRecord::new("other", "reset", "void reset(void) { gain = 0; }")?, None, Variant::Co);
    println!("unseen tokens map to the unknown id: {:?}", encode(&unseen, &vocab, 8)?);
    Ok(())
}
