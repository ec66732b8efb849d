//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ontoclust::clustering::cluster_mass;
use ontoclust::pipeline::{self, Mode};
use ontoclust::similarity::{attribute_entries, request_attribute_similarity};
use ontoclust::store::{parse_request_log, to_jsonl};
use ontoclust::{
    all_pairs_user_distances, build_user_ontology_graph, cluster_users, emit_similarity_xml,
    fuzzy_string_similarity, parse_similarity_xml, run_sweep, Clustering, DistanceTable,
    GraphParams, Matcher, Ontology, PipelineConfig, Score, SimilarityReport, SweepGrid,
    TextPipeline, UserProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed <= limit, || {
        format!("took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())
    })
}

fn fuzzy_worked_example() -> Outcome {
    let got = fuzzy_string_similarity("motor", "mortar").map_err(|e| e.to_string())?;
    check((got - 5.0 / 13.0).abs() <= 1e-12, || format!("got {got}, want 5/13"))?;
    Ok(format!("motor vs mortar = {got:.12}"))
}

fn fuzzy_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = Vec::new();
    for _ in 0..10_000 {
        let la = rng.gen_range(1..=12);
        let lb = rng.gen_range(1..=12);
        let a = random_word(&mut rng, b"abcde", la);
        let b = random_word(&mut rng, b"abcde", lb);
        let got = fuzzy_string_similarity(&a, &b).map_err(|e| e.to_string())?;
        let want = fuzzy_oracle(&a, &b);
        if (got - want).abs() > 1e-12 {
            mismatches.push(format!("{a}/{b}: {got} vs {want}"));
        }
    }
    check(mismatches.is_empty(), || {
        format!("{} mismatches, first {}", mismatches.len(), mismatches[0])
    })?;
    Ok("10000 pairs, 0 mismatches".into())
}

fn attribute_matching() -> Outcome {
    let request = "Pay load 5 kg, Stroke X 100 mm, Stroke Y 200 mm";
    let texts: Vec<String> = attribute_entries(request, "Stroke X")
        .into_iter()
        .map(|e| e.text)
        .collect();
    check(texts == ["Stroke X", "Stroke"], || format!("entries {texts:?}"))?;
    let sim = request_attribute_similarity(request, "Stroke X");
    check(sim == 1.0, || format!("similarity {sim}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1000 {
        let k = rng.gen_range(2..=4);
        let mut lengths: Vec<usize> = (2..=9).collect();
        lengths.sort_by_key(|_| rng.gen::<u32>());
        let words: Vec<String> = lengths[..k]
            .iter()
            .map(|&l| random_word(&mut rng, b"abcdefghijklmnop", l))
            .collect();
        let name = words.join(" ");
        let shortest = (0..k).min_by_key(|&i| words[i].len()).unwrap();
        let partial: Vec<&str> = (0..k).filter(|&i| i != shortest).map(|i| words[i].as_str()).collect();

        let filler = |rng: &mut ChaCha8Rng| {
            let n = rng.gen_range(0..=3);
            (0..n)
                .map(|_| {
                    let l = rng.gen_range(1..=6);
                    random_word(rng, b"qrstuvwxyz", l)
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let embed = |rng: &mut ChaCha8Rng, core: &str| format!("{} {} {}", filler(rng), core, filler(rng));

        let full = request_attribute_similarity(&embed(&mut rng, &name), &name);
        let part = request_attribute_similarity(&embed(&mut rng, &partial.join(" ")), &name);
        let single = request_attribute_similarity(&embed(&mut rng, &words[shortest]), &name);
        check(full == 1.0 && full > part && part > single && single > 0.0, || {
            format!("case {case} `{name}`: full {full}, partial {part}, single {single}")
        })?;
    }
    Ok("example entries [Stroke X, Stroke] with similarity 1; 1000 orderings hold".into())
}

fn fig3_reconstruction() -> Outcome {
    let start = Instant::now();
    let ontology = Ontology::from_json(SAMPLE_ONTOLOGY).map_err(|e| e.to_string())?;
    let records = parse_request_log(SAMPLE_REQUESTS, "requests.jsonl").map_err(|e| e.to_string())?;
    check(ontology.classes().len() == 10 && records.len() == 5, || {
        format!("{} classes, {} requests", ontology.classes().len(), records.len())
    })?;
    let pick: Vec<&str> = records
        .iter()
        .filter(|r| r.text.contains("Pick & place") || r.text.contains("pick & place"))
        .map(|r| r.request_id.as_str())
        .collect();
    check(pick.len() == 2, || format!("{} requests name the class", pick.len()))?;

    let matcher = Matcher::new(&ontology, TextPipeline::new(PipelineConfig::default()));
    let params = GraphParams::new(0.2, 0.2, 0.001).map_err(|e| e.to_string())?;
    let out = pipeline::run(&records, &BTreeMap::new(), &matcher, &params, 0.6, Mode::Requests)
        .map_err(|e| e.to_string())?;
    let c = &out.clustering;
    check(c.cluster_count() == 2, || format!("{} clusters", c.cluster_count()))?;
    check(c.cluster_of(pick[0]) == c.cluster_of(pick[1]), || {
        "the two pick & place requests are split".into()
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    let sizes: Vec<usize> = c.clusters.iter().map(|k| k.members.len()).collect();
    Ok(format!("2 clusters of sizes {sizes:?}"))
}

/// Widest plateau before the terminal run, whose count is the number of
/// connected components.
fn widest(plateaus: &[ontoclust::Plateau], terminal: usize) -> f64 {
    plateaus
        .iter()
        .filter(|p| p.cluster_count > terminal)
        .map(|p| p.width())
        .fold(0.0, f64::max)
}

fn fig4_properties() -> Outcome {
    let start = Instant::now();
    let eps = 0.001;
    let cc_values = vec![eps, 0.1, 0.2, 0.5];
    let mut d_max_values = SweepGrid::log_spaced(1e-4, 20.0, 400);
    d_max_values.push(1e6);
    let grid = SweepGrid {
        d_max_values,
        cc_weight_values: cc_values.clone(),
        ca_weight: 0.2,
        epsilon: eps,
    };
    let datasets = 10;
    let mut widths = Vec::new();
    for seed in 0..datasets {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let ontology = topic_ontology(&mut rng, 4);
        let profiles = topic_profiles(&mut rng, &ontology, 20, 1);
        let result = run_sweep(&profiles, &ontology, &grid).map_err(|e| e.to_string())?;
        let mut terminals = BTreeMap::new();
        for &cc in &cc_values {
            let curve = result.curve(cc);
            for &(d, n) in &curve {
                if d < eps {
                    check(n == 20, || format!("seed {seed} cc {cc}: {n} clusters at d_max {d}"))?;
                }
            }
            check(curve.windows(2).all(|w| w[1].1 <= w[0].1), || {
                format!("seed {seed} cc {cc}: count increases")
            })?;
            let params = GraphParams::new(cc, 0.2, eps).map_err(|e| e.to_string())?;
            let g0 = build_user_ontology_graph(&profiles, &ontology, &params).map_err(|e| e.to_string())?;
            let components = all_pairs_user_distances(&g0).component_count();
            let terminal = curve.last().unwrap().1;
            check(terminal == components, || {
                format!("seed {seed} cc {cc}: terminal {terminal}, components {components}")
            })?;
            terminals.insert(cc.to_bits(), terminal);
        }
        let flat = widest(result.plateaus_for(eps), terminals[&eps.to_bits()]);
        let tiered = widest(result.plateaus_for(0.2), terminals[&0.2f64.to_bits()]);
        check(flat < tiered, || {
            format!("seed {seed}: widest plateau {flat:.4} at cc=eps vs {tiered:.4} at cc=0.2")
        })?;
        widths.push((flat, tiered));
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    let mean = |f: fn(&(f64, f64)) -> f64| widths.iter().map(f).sum::<f64>() / widths.len() as f64;
    Ok(format!(
        "{datasets} datasets; mean widest plateau {:.4} at cc=eps, {:.4} at cc=0.2",
        mean(|w| w.0),
        mean(|w| w.1)
    ))
}

fn floyd_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..200 {
        let n = rng.gen_range(2..=8);
        let density = rng.gen_range(0.1..0.9);
        let g = random_graph(&mut rng, n, density);
        let table = all_pairs_user_distances(&g);
        let users = g.user_indices();
        for (i, &a) in users.iter().enumerate() {
            for (j, &b) in users.iter().enumerate() {
                let want = if a == b { 0.0 } else { exhaustive_distance(&g, a, b) };
                let got = table.get(i, j);
                check(same_distance(got, want), || {
                    format!("small graph {case}: d({a},{b}) = {got}, enumeration gives {want}")
                })?;
            }
        }
    }
    for case in 0..20 {
        let density = rng.gen_range(0.01..0.08);
        let g = random_graph(&mut rng, 100, density);
        let table = all_pairs_user_distances(&g);
        let users = g.user_indices();
        for (i, &a) in users.iter().enumerate() {
            let dist = dijkstra(&g, a);
            for (j, &b) in users.iter().enumerate() {
                let got = table.get(i, j);
                check(same_distance(got, dist[b]), || {
                    format!("large graph {case}: d({a},{b}) = {got}, dijkstra gives {}", dist[b])
                })?;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok("200 small graphs vs path enumeration, 20 graphs of 100 nodes vs dijkstra".into())
}

fn same_distance(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9
}

fn clustering_trace() -> Outcome {
    let start = Instant::now();
    let t = DistanceTable::from_arcs(&["u1", "u2", "u3"], &[(0, 1, 0.1), (1, 2, 0.5)]);
    let c = cluster_users(&t, 0.2).map_err(|e| e.to_string())?;
    let got: Vec<(Vec<String>, f64)> = c.clusters.iter().map(|k| (k.members.clone(), k.mass)).collect();
    check(
        got.len() == 2
            && got[0].0 == ["u1", "u2"]
            && (got[0].1 - 0.1).abs() < 1e-12
            && got[1].0 == ["u3"]
            && got[1].1 == 0.0,
        || format!("hand trace gave {got:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..10_000 {
        let n = rng.gen_range(1..=30);
        let names: Vec<String> = (0..n).map(|i| format!("u{i:02}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let density = rng.gen_range(0.0..=1.0);
        let mut arcs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    let w = if rng.gen_bool(0.3) {
                        rng.gen_range(1..=10) as f64 * 0.05
                    } else {
                        rng.gen_range(0.002..1.0)
                    };
                    arcs.push((a, b, w));
                }
            }
        }
        let table = DistanceTable::from_arcs(&refs, &arcs);
        let d_max = rng.gen_range(0.01..2.0);
        let c = cluster_users(&table, d_max).map_err(|e| e.to_string())?;
        verify_clustering(&c, &table, &names, d_max).map_err(|e| format!("case {case}: {e}"))?;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok("hand trace {u1,u2}:0.1, {u3}:0; 10000 random runs valid".into())
}

fn verify_clustering(c: &Clustering, t: &DistanceTable, users: &[String], d_max: f64) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for k in &c.clusters {
        check(!k.members.is_empty(), || "empty cluster".into())?;
        for m in &k.members {
            check(seen.insert(m.clone()), || format!("{m} in two clusters"))?;
        }
        check(k.mass <= d_max, || format!("mass {} over d_max {d_max}", k.mass))?;
        let replayed = cluster_mass(k, &c.merge_log, t);
        check((replayed - k.mass).abs() <= 1e-9, || {
            format!("reported mass {} but merges add up to {replayed}", k.mass)
        })?;
        if k.members.len() == 1 {
            check(k.mass == 0.0, || "singleton with mass".into())?;
        }
    }
    let all: BTreeSet<String> = users.iter().cloned().collect();
    check(seen == all, || "clusters do not cover the users".into())?;
    for (i, a) in c.clusters.iter().enumerate() {
        for b in &c.clusters[i + 1..] {
            let mut link = f64::INFINITY;
            for x in &a.members {
                for y in &b.members {
                    link = link.min(t.get(t.index_of(x).unwrap(), t.index_of(y).unwrap()));
                }
            }
            check(link + a.mass + b.mass > d_max, || {
                format!("clusters {:?} and {:?} could still merge", a.members, b.members)
            })?;
        }
    }
    Ok(())
}

/// Best of `repeats` timings of `f`, in seconds.
fn best_time(repeats: usize, mut f: impl FnMut()) -> f64 {
    (0..repeats)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn complexity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut floyd = Vec::new();
    for &n in &[50usize, 100, 200, 400] {
        let g = random_graph(&mut rng, n, 0.3);
        let repeats = if n <= 100 { 20 } else { 5 };
        let t = best_time(repeats, || {
            std::hint::black_box(all_pairs_user_distances(&g));
        });
        floyd.push((n as f64, t));
    }
    let floyd_slope = log_log_slope(&floyd);

    let mut build = Vec::new();
    for &(users, topics) in &[(100usize, 5usize), (200, 10), (400, 20), (800, 40)] {
        let ontology = topic_ontology(&mut rng, topics);
        let classes: Vec<String> = ontology.classes().iter().map(|c| c.id.clone()).collect();
        let profiles: Vec<UserProfile> = (0..users)
            .map(|u| UserProfile {
                user_id: format!("u{u}"),
                personal: BTreeMap::new(),
                reports: vec![SimilarityReport {
                    request_id: format!("r{u}"),
                    class_scores: classes.iter().map(|c| Score::new(c, rng.gen_range(0.3..=1.0))).collect(),
                    attribute_scores: Vec::new(),
                }],
            })
            .collect();
        let params = GraphParams::default();
        let t = best_time(5, || {
            std::hint::black_box(build_user_ontology_graph(&profiles, &ontology, &params).unwrap());
        });
        build.push(((users * classes.len()) as f64, t));
    }
    let build_slope = log_log_slope(&build);

    check((floyd_slope - 3.0).abs() <= 0.4, || {
        format!("floyd slope {floyd_slope:.2}, timings {floyd:?}")
    })?;
    check((build_slope - 1.0).abs() <= 0.4, || {
        format!("graph construction slope {build_slope:.2} in N*L, timings {build:?}")
    })?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("floyd slope {floyd_slope:.2}, graph construction slope {build_slope:.2}"))
}

fn round_trips() -> Outcome {
    let ontology = Ontology::from_json(SAMPLE_ONTOLOGY).map_err(|e| e.to_string())?;
    let onto_json = ontology.to_json();
    let again = Ontology::from_json(&onto_json).map_err(|e| e.to_string())?.to_json();
    check(again == onto_json, || "ontology document changed".into())?;

    let records = parse_request_log(SAMPLE_REQUESTS, "requests.jsonl").map_err(|e| e.to_string())?;
    let jsonl = to_jsonl(&records);
    check(jsonl == SAMPLE_REQUESTS, || "request log differs from the corpus file".into())?;
    let reparsed = parse_request_log(&jsonl, "requests.jsonl").map_err(|e| e.to_string())?;
    check(to_jsonl(&reparsed) == jsonl, || "request log changed".into())?;

    let matcher = Matcher::new(&ontology, TextPipeline::new(PipelineConfig::default()));
    let reports: Vec<SimilarityReport> = records
        .iter()
        .map(|r| matcher.match_request(&r.request_id, &r.text))
        .collect();
    let xml = emit_similarity_xml(&reports);
    let parsed = parse_similarity_xml(&xml).map_err(|e| e.to_string())?;
    check(emit_similarity_xml(&parsed) == xml, || "similarity XML changed".into())?;

    let params = GraphParams::default();
    for mode in [Mode::Requests, Mode::Users] {
        let out = pipeline::run(&records, &BTreeMap::new(), &matcher, &params, 0.6, mode)
            .map_err(|e| e.to_string())?;
        let json = out.clustering.to_json();
        let back = Clustering::from_json(&json).map_err(|e| e.to_string())?;
        check(back.to_json() == json, || format!("clustering JSON changed in {mode} mode"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(1..=20);
        let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut arcs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.3) {
                    arcs.push((a, b, rng.gen::<f64>() + 1e-3));
                }
            }
        }
        let c = cluster_users(&DistanceTable::from_arcs(&refs, &arcs), 1.0).map_err(|e| e.to_string())?;
        let json = c.to_json();
        let back = Clustering::from_json(&json).map_err(|e| e.to_string())?;
        check(back.to_json() == json, || "random clustering JSON changed".into())?;
    }
    Ok("ontology, request log, similarity XML and clustering JSON are byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("fuzzy similarity worked example", fuzzy_worked_example),
        ("fuzzy similarity oracle equivalence", fuzzy_oracle_equivalence),
        ("attribute matching", attribute_matching),
        ("two-cluster reconstruction", fig3_reconstruction),
        ("sweep curve properties", fig4_properties),
        ("shortest-path oracle", floyd_oracle),
        ("clustering trace and invariants", clustering_trace),
        ("complexity smoke test", complexity),
        ("round trips", round_trips),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
