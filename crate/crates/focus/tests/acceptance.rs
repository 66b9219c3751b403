//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use focus_core::baselines::{procrustes_align, wechsel_combine, AlignedSpaces, SeedDictionary, WechselConfig};
use focus_core::corpus::Corpus;
use focus_core::similarity::cosine;
use focus_core::skipgram::{sgns_gradient, sgns_loss};
use focus_core::sparsemax::sparsemax;
use focus_core::vocab::{canonicalize, compute_overlap, MatchKind, OverlapEntry, OverlapResult};
use focus_core::{
    focus_initialize, size_report, AuxiliarySpace, EmbeddingMatrix, FocusConfig, RowOrigin, SpaceMarker, TrainConfig,
    Vocabulary,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "sparsemax oracle equivalence", limit: Duration::from_secs(5), run: sparsemax_oracle },
        Criterion { name: "overlap rows copied bit-exactly", limit: Duration::from_secs(1), run: gold_standard_copy },
        Criterion { name: "combined rows in convex hull", limit: Duration::from_secs(5), run: convex_hull },
        Criterion { name: "verify self-consistency", limit: Duration::from_secs(60), run: verify_pipeline },
        Criterion { name: "skip-gram gradient check", limit: Duration::from_secs(10), run: gradient_check },
        Criterion {
            name: "skip-gram interchangeable tokens",
            limit: Duration::from_secs(120),
            run: interchangeable_tokens,
        },
        Criterion { name: "procrustes recovery", limit: Duration::from_secs(1), run: procrustes_recovery },
        Criterion { name: "wechsel oracle", limit: Duration::from_secs(5), run: wechsel_oracle },
        Criterion { name: "size report arithmetic", limit: Duration::from_secs(1), run: size_arithmetic },
        Criterion {
            name: "full-scale overlap counts (optional)",
            limit: Duration::from_secs(600),
            run: full_scale_overlap,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let line = match outcome {
            Ok(detail) if detail.starts_with("SKIP") => format!("SKIP {}: {}", c.name, &detail[5..]),
            Ok(_) if took > c.limit => {
                failed += 1;
                format!("FAIL {}: took {:.2}s, limit {}s", c.name, took.as_secs_f64(), c.limit.as_secs())
            }
            Ok(detail) => format!("PASS {}: {detail} [{:.2}s]", c.name, took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                format!("FAIL {}: {why} [{:.2}s]", c.name, took.as_secs_f64())
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Simplex projection by enumerating every candidate support set and keeping
/// the one that satisfies the optimality conditions.
fn projection_oracle(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let tau = (members.iter().map(|&i| z[i]).sum::<f64>() - 1.0) / members.len() as f64;
        if members.iter().any(|&i| z[i] - tau < -1e-12) {
            continue;
        }
        let p: Vec<f64> = (0..n).map(|i| if mask & (1 << i) != 0 { z[i] - tau } else { 0.0 }).collect();
        let dist: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p));
        }
    }
    best.expect("some support is feasible").1
}

fn sparsemax_oracle() -> Outcome {
    let worked: [(&[f64], &[f64]); 3] =
        [(&[2.0, 1.0, 0.1], &[1.0, 0.0, 0.0]), (&[1.0, 0.9], &[0.55, 0.45]), (&[-3.7], &[1.0])];
    for (z, expected) in worked {
        let p = sparsemax(z).map_err(|e| e.to_string())?;
        for (a, b) in p.iter().zip(expected) {
            check((a - b).abs() < 1e-12, || format!("sparsemax({z:?}) = {p:?}, expected {expected:?}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_dev = 0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=12);
        let scale = [0.1, 1.0, 10.0][rng.random_range(0..3)];
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
        let p = sparsemax(&z).map_err(|e| e.to_string())?;
        let q = projection_oracle(&z);
        for (a, b) in p.iter().zip(&q) {
            max_dev = max_dev.max((a - b).abs());
        }
        check(max_dev < 1e-8, || format!("deviation {max_dev:e} on {z:?}"))?;
    }
    Ok(format!("1000 vectors, max deviation {max_dev:.1e}"))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    EmbeddingMatrix::new(rows, dim, (0..rows * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap()
}

fn vocab(tokens: &[String]) -> Vocabulary {
    canonicalize(&Vocabulary::new(tokens.to_vec(), SpaceMarker::Sentencepiece).unwrap(), SpaceMarker::Sentencepiece)
        .unwrap()
}

fn gold_standard_copy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let source: Vec<String> = (0..20).map(|i| format!("▁s{i}")).collect();
    // Eight target tokens appear in the source (one only up to case), four do not.
    let mut target: Vec<String> = [3, 0, 17, 9, 12, 5, 19, 8].iter().map(|i| format!("▁s{i}")).collect();
    target[7] = "▁S8".into();
    target.extend((0..4).map(|i| format!("▁t{i}")));
    let (sv, tv) = (vocab(&source), vocab(&target));
    let overlap = compute_overlap(&sv, &tv, true);
    check(overlap.overlap.len() == 8, || format!("expected 8 overlap tokens, found {}", overlap.overlap.len()))?;
    let source_emb = random_matrix(&mut rng, 20, 16);
    let aux = AuxiliarySpace::from_vectors(random_matrix(&mut rng, 12, 10));
    let out =
        focus_initialize(&source_emb, &overlap, &aux, &FocusConfig::default(), None).map_err(|e| e.to_string())?;
    check(out.embeddings.rows() == 12, || "replace mode must give one row per target token".into())?;
    for (t, tok) in target.iter().take(8).enumerate() {
        let s = source.iter().position(|x| x.eq_ignore_ascii_case(tok)).unwrap();
        let same = out.embeddings.row(t).iter().zip(source_emb.row(s)).all(|(a, b)| a.to_bits() == b.to_bits());
        check(same, || format!("target {tok} is not a bit copy of source row {s}"))?;
    }
    Ok("8 overlap rows of a 20/12 instance bit-equal".into())
}

fn convex_hull() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (n_overlap, n_additional, dim) = (300, 500, 24);
    let source_emb = random_matrix(&mut rng, n_overlap + 50, dim);
    let overlap = OverlapResult {
        overlap: (0..n_overlap)
            .map(|i| OverlapEntry { target_id: i, source_id: (i * 7) % (n_overlap + 50), kind: MatchKind::Exact })
            .collect(),
        additional: (n_overlap..n_overlap + n_additional).collect(),
        source_vocab_size: n_overlap + 50,
        target_vocab_size: n_overlap + n_additional,
        fuzzy_collisions: vec![],
    };
    // Clustered auxiliary vectors so supports have more than one member.
    let centers = random_matrix(&mut rng, 20, 12);
    let rows: Vec<Vec<f32>> = (0..n_overlap + n_additional)
        .map(|_| {
            let c = centers.row(rng.random_range(0..20));
            c.iter().map(|v| v + rng.random_range(-0.15f32..0.15)).collect()
        })
        .collect();
    let aux = AuxiliarySpace::from_vectors(EmbeddingMatrix::from_rows(&rows).unwrap());
    let out =
        focus_initialize(&source_emb, &overlap, &aux, &FocusConfig::default(), None).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut max_support = 0;
    for rec in &out.rows {
        let RowOrigin::Combined(w) = &rec.origin else { continue };
        let sum: f64 = w.support.iter().map(|s| s.weight).sum();
        check((sum - 1.0).abs() < 1e-6, || format!("weights of token {} sum to {sum}", w.additional_id))?;
        check(w.support.iter().all(|s| s.weight > 0.0), || "non-positive weight in support".into())?;
        max_support = max_support.max(w.support.len());
        for j in 0..dim {
            let vals = w.support.iter().map(|s| source_emb.row(s.source_id)[j]);
            let lo = vals.clone().fold(f32::INFINITY, f32::min);
            let hi = vals.fold(f32::NEG_INFINITY, f32::max);
            let v = out.embeddings.row(rec.row)[j];
            check(lo <= v && v <= hi, || format!("token {} column {j}: {v} outside [{lo}, {hi}]", w.additional_id))?;
        }
        checked += 1;
    }
    check(checked == n_additional, || format!("only {checked} of {n_additional} rows were combined"))?;
    Ok(format!("{checked} tokens, support size up to {max_support}"))
}

fn verify_pipeline() -> Outcome {
    let toy = common::toy(2000, 64, 14);
    let run_dir = toy.path("run");
    let o = common::run(&common::init_args(&toy, &run_dir, &["--dim", "300"]));
    check(o.status.success(), || format!("init failed: {}", common::stderr(&o)))?;
    let emb = run_dir.join("embeddings.vtm");
    let weights = run_dir.join("weights.jsonl");
    let verify = |e: &std::path::Path| {
        common::run(&[
            "verify",
            "--embeddings",
            common::s(e),
            "--source-emb",
            common::s(&toy.source_emb),
            "--weights",
            common::s(&weights),
        ])
    };
    let o = verify(&emb);
    check(o.status.success(), || format!("verify rejected untouched artifacts: {}", common::stderr(&o)))?;

    let records = focus::audit::read_audit(&weights).map_err(|e| e.to_string())?;
    let weighted = records.iter().filter(|r| r.kind == focus::audit::RowKind::Weighted).count();
    let victim = records.iter().find(|r| r.kind == focus::audit::RowKind::Weighted).ok_or("no weighted rows")?;
    let (rows, dim, mut data, meta) = focus::vtm::load(&emb).map_err(|e| e.to_string())?.into_parts();
    data[victim.row * dim + dim / 2] *= 1.01;
    data[victim.row * dim + dim / 2] += 1e-4;
    let tampered = toy.path("tampered.vtm");
    let m = EmbeddingMatrix::with_meta(rows, dim, data, meta).map_err(|e| e.to_string())?;
    focus::vtm::save(&m, &tampered).map_err(|e| e.to_string())?;
    let o = verify(&tampered);
    check(o.status.code() == Some(3), || format!("perturbed row was accepted (status {:?})", o.status.code()))?;
    let err = common::stderr(&o);
    check(err.contains(&format!("{:?}", victim.token)), || format!("failure does not name {:?}: {err}", victim.token))?;
    Ok(format!("{} rows ({weighted} weighted) verified; perturbed {:?} rejected", records.len(), victim.token))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative log-likelihood of one positive pair and its negatives.
fn reference_loss(v: &[f64], u: &[f64], negs: &[Vec<f64>]) -> f64 {
    -sigmoid(dot(u, v)).ln() - negs.iter().map(|n| sigmoid(-dot(n, v)).ln()).sum::<f64>()
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = 0f64;
    for _ in 0..100 {
        let dim = rng.random_range(2..40);
        let k = rng.random_range(1..8);
        let scale = rng.random_range(0.05..0.6);
        let vec = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.random_range(-scale..scale)).collect::<Vec<f64>>();
        let v = vec(&mut rng);
        let u = vec(&mut rng);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec(&mut rng)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();

        let l = sgns_loss(&v, &u, &neg_refs);
        let r = reference_loss(&v, &u, &negs);
        check((l - r).abs() <= 1e-12 * r.abs().max(1.0), || format!("loss {l} differs from reference {r}"))?;

        let g = sgns_gradient(&v, &u, &neg_refs);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..dim)
            .map(|i| {
                let (mut plus, mut minus) = (v.clone(), v.clone());
                plus[i] += h;
                minus[i] -= h;
                (reference_loss(&plus, &u, &negs) - reference_loss(&minus, &u, &negs)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = g.center.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm: f64 = numeric.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / norm);
        check(diff / norm < 1e-5, || format!("relative error {:e} at dim {dim}, {k} negatives", diff / norm))?;
    }
    Ok(format!("100 configurations, worst relative error {worst:.1e}"))
}

fn interchangeable_tokens() -> Outcome {
    // Twenty topics, each with thirty context words and one pair (X, Y).
    // A sentence is fifteen words of one topic with X or Y (fair coin) at a
    // random slot, so X and Y of a topic share one context distribution.
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let (topics, words, len) = (20, 30, 15);
    let word = |t: usize, j: usize| (2 * topics + t * words + j) as u32;
    let sequences: Vec<Vec<u32>> = (0..10_000)
        .map(|_| {
            let t = rng.random_range(0..topics);
            let mut s: Vec<u32> = (0..words).map(|j| word(t, j)).collect();
            s.shuffle(&mut rng);
            s.truncate(len);
            let slot = rng.random_range(0..=len);
            s.insert(slot, (2 * t + rng.random_range(0..2)) as u32);
            s
        })
        .collect();
    let corpus = Corpus::new(sequences, topics * (2 + words)).map_err(|e| e.to_string())?;
    let cfg = TrainConfig { seed: 7, ..TrainConfig::default() };
    let (space, stats) = focus_core::train_skipgram(&corpus, &cfg).map_err(|e| e.to_string())?;
    let cos = |a: usize, b: usize| cosine(space.input.row(a), space.input.row(b)).map_err(|e| e.to_string());
    let mut worst = f64::INFINITY;
    let mut control = 0.0;
    for t in 0..topics {
        let xy = cos(2 * t, 2 * t + 1)?;
        worst = worst.min(xy);
        check(xy > 0.8, || format!("topic {t}: cosine(X, Y) = {xy:.3}"))?;
        control += cos(2 * t, 2 * ((t + 1) % topics) + 1)? / topics as f64;
    }
    check(control < 0.8, || format!("pairs from different topics are just as close ({control:.3})"))?;
    Ok(format!(
        "min cosine(X, Y) = {worst:.3} over {topics} pairs, cross-topic mean {control:.3}, {} epochs",
        stats.epochs
    ))
}

/// Orthonormalizes the columns of a random matrix.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
        let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for q in &cols {
                let p = dot(&c, q);
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-6 {
            cols.push(c.into_iter().map(|x| x / norm).collect());
        }
    }
    // r[i][j] = cols[j][i]
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

#[allow(clippy::needless_range_loop)]
fn procrustes_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (dim, n) = (20, 500);
    let r = random_orthogonal(&mut rng, dim);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = (0..dim).map(|j| (0..dim).map(|i| x[i] * r[i][j]).sum()).collect();
            (x, y)
        })
        .collect();
    let w = procrustes_align(&SeedDictionary::new(&pairs).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut fro = 0.0;
    let mut ortho = 0f64;
    for i in 0..dim {
        for j in 0..dim {
            fro += (w.get(i, j) - r[i][j]).powi(2);
            let wtw: f64 = (0..dim).map(|k| w.get(k, i) * w.get(k, j)).sum();
            ortho = ortho.max((wtw - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let fro = fro.sqrt();
    check(fro < 1e-6, || format!("||W - R||_F = {fro:e}"))?;
    check(ortho < 1e-6, || format!("W^T W deviates from I by {ortho:e}"))?;
    Ok(format!("||W - R||_F = {fro:.1e}, max |W^T W - I| = {ortho:.1e}"))
}

fn wechsel_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut worst = 0f64;
    for instance in 0..20 {
        let (ns, nt, dim, edim) = (50, 10, 8, 6);
        let k = rng.random_range(1..=5);
        let temperature = rng.random_range(0.2..2.0);
        let src_tok = random_matrix(&mut rng, ns, dim);
        let tgt_tok = random_matrix(&mut rng, nt, dim);
        let emb = random_matrix(&mut rng, ns, edim);
        let cfg = WechselConfig { k, temperature, ..Default::default() };
        let spaces = AlignedSpaces::new(src_tok.clone(), tgt_tok.clone()).map_err(|e| e.to_string())?;
        let out = wechsel_combine(&spaces, &emb, &cfg).map_err(|e| e.to_string())?;
        for t in 0..nt {
            let tv: Vec<f64> = tgt_tok.row(t).iter().map(|&x| x as f64).collect();
            let mut sims: Vec<(usize, f64)> = (0..ns)
                .map(|s| {
                    let sv: Vec<f64> = src_tok.row(s).iter().map(|&x| x as f64).collect();
                    (s, dot(&tv, &sv) / (dot(&tv, &tv).sqrt() * dot(&sv, &sv).sqrt()))
                })
                .collect();
            sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let top = &sims[..k];
            let z: f64 = top.iter().map(|(_, c)| (c / temperature).exp()).sum();
            for j in 0..edim {
                let expected: f64 = top.iter().map(|&(s, c)| (c / temperature).exp() / z * emb.row(s)[j] as f64).sum();
                let dev = (out.embeddings.row(t)[j] as f64 - expected).abs();
                worst = worst.max(dev);
                check(dev < 1e-6, || format!("instance {instance}, target {t}: deviation {dev:e}"))?;
            }
        }
        let one = wechsel_combine(&spaces, &emb, &WechselConfig { k: 1, ..cfg }).map_err(|e| e.to_string())?;
        for t in 0..nt {
            let best = (0..ns)
                .max_by(|&a, &b| {
                    let c = |s: usize| cosine(tgt_tok.row(t), src_tok.row(s)).unwrap();
                    c(a).partial_cmp(&c(b)).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            check(one.embeddings.row(t) == emb.row(best), || format!("k=1 row {t} is not a copy of source {best}"))?;
        }
    }
    Ok(format!("20 instances, max deviation {worst:.1e}; k=1 rows are exact copies"))
}

fn size_arithmetic() -> Outcome {
    let non_embedding = 278_000_000 - 250_002 * 768;
    let r = size_report(non_embedding, 768, 250_002, 50_000, true).map_err(|e| e.to_string())?;
    let within = |x: u64, quoted: f64| ((x as f64 - quoted) / quoted).abs() < 0.01;
    check(within(r.old_total, 278e6), || format!("old total {}", r.old_total))?;
    check(within(r.new_total, 124e6), || format!("new total {}", r.new_total))?;
    check(r.reduction_fraction > 0.55, || format!("reduction {}", r.reduction_fraction))?;
    Ok(format!("{} -> {} parameters, reduction {:.4}", r.old_total, r.new_total, r.reduction_fraction))
}

fn full_scale_overlap() -> Outcome {
    let (Ok(source), Ok(target)) = (std::env::var("FOCUS_SOURCE_VOCAB"), std::env::var("FOCUS_TARGET_VOCAB")) else {
        return Ok("SKIP FOCUS_SOURCE_VOCAB / FOCUS_TARGET_VOCAB not set".into());
    };
    let marker = |var: &str| -> Result<SpaceMarker, String> {
        match std::env::var(var).as_deref() {
            Err(_) => Ok(SpaceMarker::Sentencepiece),
            Ok(m) => serde_json::from_value(serde_json::Value::String(m.into())).map_err(|e| e.to_string()),
        }
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = focus::config::PipelineConfig::default();
    cfg.paths.source_vocab = Some(source.into());
    cfg.paths.target_vocab = Some(target.into());
    cfg.paths.run_dir = dir.path().to_path_buf();
    cfg.canon.source = marker("FOCUS_SOURCE_MARKER")?;
    cfg.canon.target = marker("FOCUS_TARGET_MARKER")?;
    let report = focus::pipeline::cmd_overlap(&cfg).map_err(|e| e.to_string())?;
    let o = report.overlap.ok_or("no overlap section")?;
    check(o.overlap_count == 20_721 && o.clean_overlap_count == 13_500, || {
        format!(
            "overlap {} ({} exact, {} fuzzy), clean {}; expected 20721 / 13500",
            o.overlap_count, o.exact_count, o.fuzzy_count, o.clean_overlap_count
        )
    })?;
    Ok(format!("overlap {}, clean {}", o.overlap_count, o.clean_overlap_count))
}
