//! Seeded random scenarios small enough to run by the hundred.

#![allow(dead_code)]

use adtrap_core::simulation::Scenario;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

const TOPICS: usize = 6;
const AUDIENCES: usize = 4;

fn taxonomy() -> Value {
    let topics: Vec<Value> = (0..TOPICS)
        .map(|i| json!({"id": format!("t{i}"), "name": format!("Topic {i}")}))
        .collect();
    let interests: Vec<Value> = (0..TOPICS)
        .map(|i| json!({"id": format!("i{i}"), "name": format!("Interest {i}"), "source_topics": [format!("t{i}"), format!("t{}", (i + 1) % TOPICS)]}))
        .collect();
    let audiences: Vec<Value> = (0..AUDIENCES)
        .map(|a| json!({"id": format!("a{a}"), "name": format!("Audience {a}"), "qualifying_interests": [format!("i{a}"), format!("i{}", a + 2)]}))
        .collect();
    json!({"topics": topics, "interests": interests, "audiences": audiences})
}

fn pick_topics<R: Rng>(rng: &mut R) -> Vec<String> {
    let n = rng.gen_range(1..=2);
    let mut all: Vec<usize> = (0..TOPICS).collect();
    all.shuffle(rng);
    all[..n].iter().map(|i| format!("t{i}")).collect()
}

fn subset<R: Rng>(rng: &mut R, items: &[String], min: usize) -> Vec<String> {
    let mut v: Vec<String> = items
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .cloned()
        .collect();
    while v.len() < min {
        v.push(items.choose(rng).unwrap().clone());
        v.sort();
        v.dedup();
    }
    v
}

/// A valid scenario with rival campaigns on tight budgets, optional attack,
/// and users whose visits land anywhere up to the horizon.
pub fn random_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let n_sites = rng.gen_range(2..=4);
    let mut sites: Vec<Value> = (0..n_sites)
        .map(|s| {
            let pages: Vec<Value> = (0..rng.gen_range(1..=2))
                .map(|p| json!({"id": format!("s{s}/p{p}"), "topics": pick_topics(rng)}))
                .collect();
            json!({"id": format!("s{s}"), "domain": format!("s{s}.example"), "pages": pages, "owner": "third_party", "logging": rng.gen_bool(0.5)})
        })
        .collect();
    sites.push(json!({"id": "atk", "domain": "atk.example", "pages": [{"id": "atk/home", "topics": pick_topics(rng)}], "owner": "attacker", "logging": true}));
    let site_ids: Vec<String> = (0..n_sites)
        .map(|s| format!("s{s}"))
        .chain(["atk".to_string()])
        .collect();
    let audience_ids: Vec<String> = (0..AUDIENCES).map(|a| format!("a{a}")).collect();

    let campaigns: Vec<Value> = (0..rng.gen_range(0..=3))
        .map(|c| {
            let groups: Vec<Value> = (0..rng.gen_range(1..=3))
                .map(|g| {
                    let bid = match rng.gen_range(0..3) {
                        0 => json!({"kind": "cpm", "amount": rng.gen_range(1..=120) as f64}),
                        1 => json!({"kind": "cpc", "amount": rng.gen_range(1..=500) as f64 / 100.0}),
                        _ => json!({"kind": "cpa", "amount": rng.gen_range(1..=200) as f64 / 10.0}),
                    };
                    json!({
                        "id": format!("c{c}/g{g}"),
                        "ads": [{"id": format!("c{c}-g{g}-ad")}],
                        "target_audiences": subset(rng, &audience_ids, 1),
                        "placement": if rng.gen_bool(0.3) { vec![] } else { subset(rng, &site_ids, 1) },
                        "bid": bid,
                    })
                })
                .collect();
            json!({"id": format!("c{c}"), "total_budget": rng.gen_range(1..=40) as f64 / 100.0, "ad_groups": groups})
        })
        .collect();

    let window = *[300i64, 900, 1800].choose(rng).unwrap();
    let horizon = window * rng.gen_range(1..=4);
    let users: Vec<Value> = (0..rng.gen_range(0..=8))
        .map(|u| {
            let warmup: Vec<Value> = (0..rng.gen_range(0..=3))
                .map(|_| json!({"site": site_ids.choose(rng).unwrap(), "repeat": rng.gen_range(1..=3)}))
                .collect();
            let mut times: Vec<i64> = (0..rng.gen_range(0..=5)).map(|_| rng.gen_range(0..horizon)).collect();
            times.sort();
            times.dedup();
            let visits: Vec<Value> = times
                .iter()
                .map(|t| {
                    let site = if rng.gen_bool(0.5) { "atk" } else { site_ids.choose(rng).unwrap() };
                    json!({"site": site, "timestamp": t})
                })
                .collect();
            json!({"id": format!("u{u}"), "cookie_id": format!("ck{u}"), "consent": rng.gen_bool(0.85), "warmup_plan": warmup, "attack_visits": visits})
        })
        .collect();

    let attack = rng.gen_bool(0.8).then(|| {
        json!({
            "attacker_site": "atk",
            "audiences_to_probe": subset(rng, &audience_ids, 1),
            "bid": {"kind": "cpm", "amount": rng.gen_range(1..=100) as f64},
            "budget": rng.gen_range(1..=30) as f64 / 100.0,
            "one_site_per_victim": rng.gen_bool(0.3),
            "shared_placements": if rng.gen_bool(0.2) { vec![site_ids[0].clone()] } else { vec![] },
        })
    });

    let doc = json!({
        "spec_version": 1,
        "taxonomy": taxonomy(),
        "websites": sites,
        "campaigns": campaigns,
        "users": users,
        "attack": attack,
        "window_length_s": window,
        "horizon_s": horizon,
        "seed": rng.gen::<u64>(),
        "auction": if rng.gen_bool(0.5) { "first_price" } else { "second_price" },
    });
    serde_json::from_value(doc).expect("generated scenario is valid")
}
