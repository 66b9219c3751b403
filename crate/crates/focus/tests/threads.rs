use focus::parallel::{run_focus, run_wechsel, train_skipgram};
use focus_core::baselines::{AlignedSpaces, WechselConfig, WechselPlan};
use focus_core::corpus::Corpus;
use focus_core::vocab::{MatchKind, OverlapEntry, OverlapResult};
use focus_core::{AuxiliarySpace, EmbeddingMatrix, FocusConfig, FocusPlan, InitMode, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    EmbeddingMatrix::new(rows, dim, (0..rows * dim).map(|_| rng.random_range(-1f32..1.0)).collect()).unwrap()
}

#[test]
fn focus_output_ignores_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let overlap = OverlapResult {
        overlap: (0..40).map(|i| OverlapEntry { target_id: i, source_id: 2 * i, kind: MatchKind::Exact }).collect(),
        additional: (40..240).collect(),
        source_vocab_size: 100,
        target_vocab_size: 240,
        fuzzy_collisions: vec![],
    };
    let source_emb = random(&mut rng, 100, 12);
    let mut mask = vec![true; 240];
    mask[7] = false;
    mask[200] = false;
    let input = random(&mut rng, 240, 6);
    let output = EmbeddingMatrix::new(240, 6, vec![0.0; 240 * 6]).unwrap();
    let aux = AuxiliarySpace::new(input, output, mask).unwrap();
    let cfg = FocusConfig { seed: 4, ..FocusConfig::default() };

    let run = |threads| run_focus(FocusPlan::new(&source_emb, &overlap, &aux, &cfg, None).unwrap(), threads).unwrap();
    let one = run(1);
    assert_eq!(one.summary.fallback_count, 1);
    for threads in [2, 4, 7] {
        let many = run(threads);
        assert_eq!(many.embeddings, one.embeddings);
        assert_eq!(many.rows, one.rows);
    }
}

#[test]
fn wechsel_output_ignores_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spaces = AlignedSpaces::new(random(&mut rng, 80, 5), random(&mut rng, 60, 5)).unwrap();
    let emb = random(&mut rng, 80, 9);
    let plan = WechselPlan::new(&spaces, &emb, &WechselConfig::default()).unwrap();
    let targets: Vec<usize> = (0..60).collect();
    let one = run_wechsel(&plan, &targets, InitMode::Replace, 1).unwrap();
    let four = run_wechsel(&plan, &targets, InitMode::Replace, 4).unwrap();
    assert_eq!(one.embeddings, four.embeddings);
}

#[test]
fn sharded_training_covers_the_vocabulary() {
    let sentences: Vec<Vec<u32>> = (0..300u32).map(|i| (0..8).map(|j| (i + j) % 20).collect()).collect();
    let corpus = Corpus::new(sentences, 22).unwrap();
    let cfg = TrainConfig { dim: 10, epochs: Some(2), seed: 5, ..TrainConfig::default() };
    let (space, stats) = train_skipgram(&corpus, &cfg, 3).unwrap();
    assert_eq!(space.input.rows(), 22);
    assert_eq!(space.trained_mask.iter().filter(|&&t| t).count(), 20);
    assert!(stats.loss.updates() > 0);
    // Ids 20 and 21 never occur, so they keep the seeded initialization.
    let (serial, _) = focus_core::train_skipgram(&corpus, &cfg).unwrap();
    assert_eq!(space.input.row(21), serial.input.row(21));
}
