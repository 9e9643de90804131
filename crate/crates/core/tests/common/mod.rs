//! Fixture loading, a synthetic module generator and a seeded mutator shared by
//! the integration targets.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn sorted_ll(dir: PathBuf) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ll"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Integer functions with φ nodes, branches and single-predecessor blocks.
pub fn phi_corpus() -> Vec<(String, String)> {
    sorted_ll(fixture_dir().join("phi"))
}

/// Every fixture, φ corpus included.
pub fn all_fixtures() -> Vec<(String, String)> {
    let mut out = sorted_ll(fixture_dir());
    out.extend(phi_corpus().into_iter().map(|(n, s)| (format!("phi/{n}"), s)));
    out
}

/// Deterministic argument vectors for a function of `arity` integer params.
pub fn arg_vectors(arity: usize, count: usize) -> Vec<Vec<i128>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let edges = [0i128, 1, -1, 2, 10, 255, -128, i32::MAX as i128, i32::MIN as i128];
    (0..count)
        .map(|k| {
            (0..arity)
                .map(|j| if k < edges.len() { edges[(k + j) % edges.len()] } else { rng.gen_range(-1000..1000) })
                .collect()
        })
        .collect()
}

/// A single function with roughly `instructions` instructions spread over
/// diamonds whose joins carry φ nodes.
pub fn synthetic_module(instructions: usize) -> String {
    let mut s = String::from("define i32 @synthetic(i32 %x, i32 %y) {\nentry:\n  br label %b0\n\n");
    let mut acc = "%x".to_string();
    let mut emitted = 1;
    let mut i = 0;
    while emitted < instructions {
        // 9 instructions per diamond
        let _ = write!(
            s,
            "b{i}:\n  %c{i} = icmp slt i32 {acc}, %y\n  br i1 %c{i}, label %t{i}, label %e{i}\n\n\
             t{i}:\n  %ta{i} = add i32 {acc}, {i}\n  %tb{i} = mul i32 %ta{i}, 3\n  br label %j{i}\n\n\
             e{i}:\n  %ea{i} = sub i32 {acc}, %y\n  br label %j{i}\n\n\
             j{i}:\n  %p{i} = phi i32 [ %tb{i}, %t{i} ], [ %ea{i}, %e{i} ]\n  %q{i} = xor i32 %p{i}, {acc}\n  br label %b{}\n\n",
            i + 1
        );
        acc = format!("%q{i}");
        emitted += 9;
        i += 1;
    }
    let _ = write!(s, "b{i}:\n  ret i32 {acc}\n}}\n");
    s
}

const JUNK: &[&str] = &[
    "%", "@", "{", "}", "(", ")", "[", "]", ",", "=", "!", "#0", "i32", "ptr", "label", "phi", "call",
    "getelementptr", "<4 x i32>", "0x7FF8000000000000", "c\"\\00\"", "undef", "zeroinitializer", ";", "\n",
    "blockaddress(@f, %bb)", "...", "metadata", "!{}", "x86_fp80", "addrspace(1)", "bitcast (i8* null to i32*)",
];

/// Seeded mutation of `src`: byte deletions, token insertions, line swaps and
/// truncation, one to four at a time.
pub fn mutate(src: &str, rng: &mut ChaCha8Rng) -> String {
    let mut s = src.to_string();
    for _ in 0..rng.gen_range(1..=4) {
        if s.is_empty() {
            break;
        }
        let at = floor_char(&s, rng.gen_range(0..s.len()));
        match rng.gen_range(0..5) {
            0 => {
                let end = floor_char(&s, (at + rng.gen_range(1..12)).min(s.len()));
                s.replace_range(at..end.max(at), "");
            }
            1 => s.insert_str(at, JUNK.choose(rng).unwrap()),
            2 => {
                let mut lines: Vec<&str> = s.lines().collect();
                if lines.len() > 2 {
                    let a = rng.gen_range(0..lines.len());
                    let b = rng.gen_range(0..lines.len());
                    lines.swap(a, b);
                }
                s = lines.join("\n");
            }
            3 => s.truncate(at),
            _ => {
                let mut lines: Vec<&str> = s.lines().collect();
                if !lines.is_empty() {
                    let a = rng.gen_range(0..lines.len());
                    lines.insert(a, lines[a]);
                }
                s = lines.join("\n");
            }
        }
    }
    s
}

fn floor_char(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

/// `count` mutants drawn round-robin from every fixture.
pub fn fuzz_corpus(count: usize, seed: u64) -> Vec<String> {
    let bases = all_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| mutate(&bases[i % bases.len()].1, &mut rng)).collect()
}
