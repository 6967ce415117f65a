//! Regenerates the bundled sample dump under `data/sample/`.
//!
//! cargo run -p sentibubbles --example generate_sample > crates/core/data/sample/dump.jsonl

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MENTIONS: [(&str, &[&str]); 3] = [
    ("ronaldo", &["Ronaldo", "CR7", "Cristiano Ronaldo"]),
    ("benfica", &["Benfica", "SLB"]),
    ("costa", &["António Costa", "Costa"]),
];

const TOPICAL: [&[&str]; 3] = [
    &[
        "golo", "madrid", "real", "bola", "marcou", "hattrick", "jogador", "livre", "penalti",
        "estrela",
    ],
    &[
        "águia",
        "luz",
        "estádio",
        "campeonato",
        "treinador",
        "plantel",
        "adeptos",
        "vitória",
        "jogo",
        "taça",
    ],
    &[
        "governo",
        "orçamento",
        "parlamento",
        "eleições",
        "ministro",
        "partido",
        "psd",
        "debate",
        "votação",
        "reforma",
    ],
];

const SENTIMENT: &[&str] = &[
    "ótimo",
    "excelente",
    "fantástico",
    "bom",
    "lindo",
    "feliz",
    "mau",
    "péssimo",
    "triste",
    "horrível",
    "vergonha",
];

const FILLER: &[&str] = &[
    "hoje", "ontem", "semana", "noite", "portugal", "lisboa", "grande", "notícia", "momento",
    "todos",
];

const STOP: &[&str] = &[
    "o", "a", "de", "que", "no", "na", "com", "para", "é", "não", "the", "and",
];

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2015);
    let mut id = 0;
    for day in 1..=10u32 {
        for _ in 0..100 {
            id += 1;
            let roll: f64 = rng.gen();
            let mut words: Vec<String> = Vec::new();
            let entity = rng.gen_range(0..3);
            // costa is quiet on the 5th
            let entity = if day == 5 && entity == 2 { 0 } else { entity };
            if roll < 0.05 {
                // unrelated chatter, matches nobody
                for _ in 0..8 {
                    words.push(FILLER.choose(&mut rng).unwrap().to_string());
                }
            } else if roll < 0.12 {
                // too short to survive the length rule
                words.push(MENTIONS[entity].1.choose(&mut rng).unwrap().to_string());
                words.push(TOPICAL[entity].choose(&mut rng).unwrap().to_string());
            } else {
                let n = rng.gen_range(6..14);
                for _ in 0..n {
                    let pick: f64 = rng.gen();
                    let w = if pick < 0.45 {
                        TOPICAL[entity].choose(&mut rng).unwrap()
                    } else if pick < 0.6 {
                        SENTIMENT.choose(&mut rng).unwrap()
                    } else if pick < 0.75 {
                        FILLER.choose(&mut rng).unwrap()
                    } else {
                        STOP.choose(&mut rng).unwrap()
                    };
                    words.push(w.to_string());
                }
                let at = rng.gen_range(0..=words.len());
                words.insert(at, MENTIONS[entity].1.choose(&mut rng).unwrap().to_string());
                if rng.gen_bool(0.08) {
                    let other = (entity + 1) % 3;
                    words.push(MENTIONS[other].1[0].to_string());
                }
                if rng.gen_bool(0.2) {
                    words.push(format!("https://t.co/{:x}", rng.gen::<u32>()));
                }
                if rng.gen_bool(0.3) {
                    words.push("!!".to_string());
                }
            }
            let text = words.join(" ");
            let hour = rng.gen_range(0..24);
            let minute = rng.gen_range(0..60);
            let timestamp = if rng.gen_bool(0.1) && hour == 23 {
                // same instant written with a positive offset
                format!("2015-07-{:02}T00:{minute:02}:00+01:00", day + 1)
            } else {
                format!("2015-07-{day:02}T{hour:02}:{minute:02}:00Z")
            };
            let line = serde_json::json!({ "id": format!("t{id:05}"), "timestamp": timestamp, "text": text });
            println!("{line}");
        }
        if day == 3 {
            println!("{{\"id\": \"broken\", \"timestamp\": ");
        }
    }
}
