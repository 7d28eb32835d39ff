//! Seeded generator of small, well-formed IR programs.

use anflo_core::ApiCatalog;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SOURCES: &[&str] = &["GPS_read", "contacts_read", "IPC"];
pub const SINKS: &[&str] = &["http_send", "sms_send", "bt_send", "IPC"];

pub fn catalog() -> ApiCatalog {
    ApiCatalog::parse(
        "GPS_read -> source GPS\n\
         contacts_read -> source Contacts\n\
         http_send -> sink Internet\n\
         sms_send -> sink SMS\n\
         bt_send -> sink Bluetooth\n\
         IPC -> both IPC\n",
    )
    .unwrap()
}

/// Program text with at most `max_stmts` statements over at most
/// `max_components` components.
pub fn random_program(seed: u64, max_stmts: usize, max_components: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_comp = rng.gen_range(1..=max_components);
    let names: Vec<String> = (0..n_comp).map(|i| format!("C{i}")).collect();
    let total = rng.gen_range(1..=max_stmts);
    let mut per_comp = vec![0usize; n_comp];
    for _ in 0..total {
        per_comp[rng.gen_range(0..n_comp)] += 1;
    }
    let mut text = String::new();
    for (ci, name) in names.iter().enumerate() {
        let vis = if rng.gen_bool(0.5) {
            "public"
        } else {
            "private"
        };
        text.push_str(&format!("component {name} {vis} {{\n"));
        let mut vars: Vec<String> = Vec::new();
        for si in 0..per_comp[ci] {
            let pick_args = |rng: &mut ChaCha8Rng, vars: &[String]| -> String {
                let k = rng.gen_range(1..=vars.len().min(2));
                let chosen: Vec<&String> = vars.choose_multiple(rng, k).collect();
                chosen
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let fresh = format!("v{si}");
            let kind = if vars.is_empty() {
                rng.gen_range(0..2)
            } else {
                rng.gen_range(0..5)
            };
            let line = match kind {
                0 => {
                    let api = SOURCES.choose(&mut rng).unwrap();
                    vars.push(fresh.clone());
                    format!("{fresh} = source {api}")
                }
                1 => {
                    vars.push(fresh.clone());
                    format!("{fresh} = recv")
                }
                2 => {
                    let args = pick_args(&mut rng, &vars);
                    vars.push(fresh.clone());
                    format!("{fresh} = assign({args})")
                }
                3 => {
                    let api = SINKS.choose(&mut rng).unwrap();
                    format!("sink {api}({})", pick_args(&mut rng, &vars))
                }
                _ => {
                    let target = if rng.gen_bool(0.3) {
                        "EXTERNAL".to_string()
                    } else {
                        names.choose(&mut rng).unwrap().clone()
                    };
                    format!("send {target}({})", pick_args(&mut rng, &vars))
                }
            };
            text.push_str("    ");
            text.push_str(&line);
            text.push('\n');
        }
        text.push_str("}\n");
    }
    text
}

/// A single-component program realizing exactly the given
/// (source group, sink group) pairs under `catalog()`.
pub fn flows_program(flows: &[(&str, &str)]) -> String {
    let api = |group: &str| match group {
        "GPS" => "GPS_read",
        "Contacts" => "contacts_read",
        "Internet" => "http_send",
        "SMS" => "sms_send",
        "Bluetooth" => "bt_send",
        other => panic!("no test api for {other}"),
    };
    let mut text = String::from("component Main private {\n");
    for (i, (src, snk)) in flows.iter().enumerate() {
        text.push_str(&format!("    v{i} = source {}\n", api(src)));
        text.push_str(&format!("    sink {}(v{i})\n", api(snk)));
    }
    text.push_str("}\n");
    text
}
