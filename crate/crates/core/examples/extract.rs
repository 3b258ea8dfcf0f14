//! Pulls function definitions out of C source with the brace-matching
//! extractor. Prototypes, macros and string contents are skipped.
//!
//! cargo run --example extract [file.c]

use repocat::corpus::extract_functions;

const SAMPLE: &str = r#"
#include <stdio.h>
#define SQUARE(x) ((x) * (x))

static int mix_channels(short *left, short *right, int n);

/* Averages two channels into the left buffer. */
static int mix_channels(short *left, short *right, int n)
{
    for (int i = 0; i < n; i++) {
        left[i] = (short)((left[i] + right[i]) / 2);
    }
    return n;
}

const char *greeting(void) { return "{ not a block }"; }

struct point { int x, y; };
"#;

fn main() {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).expect("readable source file"),
        None => SAMPLE.to_string(),
    };
    let extraction = extract_functions(&source);
    for f in &extraction.functions {
        println!("{} (line {}, {} bytes)", f.name, f.line, f.body.len());
    }
    for d in &extraction.diagnostics {
        println!("skipped: {d}");
    }
}
