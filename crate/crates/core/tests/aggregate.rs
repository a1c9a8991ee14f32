use proptest::prelude::*;
use synthsel_core::aggregate::*;
use synthsel_core::data::{ColumnKind, Dataset, Schema};
use synthsel_core::numerics::{frechet_distance, two_sided_normal_pvalue, Matrix, RngStream, StreamRng};
use synthsel_core::simbench::*;

fn indicator_matrix() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (1usize..30, 1usize..15).prop_flat_map(|(b, p)| proptest::collection::vec(proptest::collection::vec(any::<bool>(), p), b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn frequencies_times_b_are_column_sums(ind in indicator_matrix()) {
        let b = ind.len();
        let pi = selection_frequencies(&ind);
        for (j, &f) in pi.iter().enumerate() {
            let count = ind.iter().filter(|r| r[j]).count() as f64;
            let scaled = f * b as f64;
            prop_assert_eq!(scaled.round(), count);
            prop_assert!((scaled - count).abs() <= 1e-12 * b as f64);
        }
    }

    #[test]
    fn active_set_shrinks_with_threshold(ind in indicator_matrix(), t1 in 0.01f64..=1.0, t2 in 0.01f64..=1.0) {
        let pi = selection_frequencies(&ind);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let small = active_set(&pi, hi);
        let big = active_set(&pi, lo);
        prop_assert!(small.iter().all(|j| big.contains(j)));
    }

    #[test]
    fn replicate_order_does_not_matter(ind in indicator_matrix(), seed in any::<u64>(), thres in 0.01f64..=1.0) {
        let mut rng = RngStream::new(seed, 0).rng();
        let mut perm = ind.clone();
        rng.shuffle(&mut perm);
        let (a, b) = (selection_frequencies(&ind), selection_frequencies(&perm));
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(active_set(&a, thres), active_set(&b, thres));

        let p = ind[0].len();
        let pv = Matrix::from_fn(ind.len(), p, |_, _| rng.uniform());
        let mut rows: Vec<usize> = (0..ind.len()).collect();
        rng.shuffle(&mut rows);
        prop_assert_eq!(average_pvalues(&pv), average_pvalues(&pv.select_rows(&rows)));
    }

    #[test]
    fn alpha_is_the_replicate_mean(b in 1usize..40, p in 1usize..10, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1).rng();
        let pv = Matrix::from_fn(b, p, |_, _| rng.uniform());
        let avg = average_pvalues(&pv);
        for j in 0..p {
            let naive: f64 = (0..b).map(|i| pv[(i, j)]).sum::<f64>() / b as f64;
            prop_assert!((avg[j] - naive).abs() <= 1e-12);
        }
    }
}

#[test]
fn frequency_and_pvalue_examples() {
    let ind = vec![vec![true], vec![true], vec![false], vec![true]];
    assert_eq!(selection_frequencies(&ind), vec![0.75]);
    assert_eq!(active_set(&[1.0, 0.95, 0.5], 1.0), vec![0]);
    let pv = Matrix::from_rows(&[vec![0.02], vec![0.04], vec![0.06]]);
    assert!((average_pvalues(&pv)[0] - 0.04).abs() < 1e-15);
    assert_eq!(two_sided_normal_pvalue(0.0), 1.0);
    assert!((two_sided_normal_pvalue(1.959964) - 0.05).abs() < 1e-4);
}

fn iid_model(p: usize, beta: Vec<f64>, sigma: f64, n: usize) -> TrueModel {
    TrueModel::new(DesignSpec { kind: DesignKind::Iid, n, p }, beta, sigma, Link::Linear).unwrap()
}

#[test]
fn oracle_selection_recovers_iid_support() {
    let mut hits = 0;
    for seed in 0..10 {
        let mut rng = RngStream::new(seed, 100).rng();
        let mut beta = vec![0.0; 50];
        let mut idx: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut idx);
        for &j in &idx[..5] {
            beta[j] = if rng.bernoulli(0.5) { 2.0 } else { -2.0 };
        }
        let tm = iid_model(50, beta, 1.0, 500);
        let g = Generator::oracle(tm.clone(), 500);
        let r = run_selection(&g, &SelectionOptions::default(), seed).unwrap();
        hits += usize::from(r.active_set == tm.support);
        assert_eq!(r.replicates.len(), 20);
        assert!(r.replicates.iter().enumerate().all(|(i, rec)| rec.b == i + 1));
    }
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn selection_is_reproducible_and_seed_sensitive() {
    let tm = iid_model(8, vec![1.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0], 1.0, 60);
    let g = Generator::oracle(tm, 60);
    let opts = SelectionOptions { replicates: 6, ..Default::default() };
    let a = run_selection(&g, &opts, 11).unwrap();
    assert_eq!(a, run_selection(&g, &opts, 11).unwrap());
    let c = run_selection(&g, &opts, 12).unwrap();
    assert_ne!(a.replicates, c.replicates);
}

struct Failing;

impl ReplicateSource for Failing {
    fn n_syn(&self) -> usize {
        10
    }
    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset, AggregateError> {
        // Replicates whose first draw is small get a constant response, which the selector rejects.
        let flat = rng.uniform() < 0.5;
        let values = Matrix::from_fn(n, 3, |_, j| if j == 2 && flat { f64::NAN } else { rng.normal() });
        Ok(Dataset::new(Schema::regression(2, ColumnKind::Continuous), values)?)
    }
}

#[test]
fn replicate_error_names_the_smallest_failing_index() {
    let opts = SelectionOptions { replicates: 12, ..Default::default() };
    let err = run_selection(&Failing, &opts, 3).unwrap_err();
    let AggregateError::Replicate { b, .. } = err else { panic!("{err:?}") };
    let first_bad = (1..=12)
        .find(|&b| RngStream::new(3, b as u64).rng().uniform() < 0.5)
        .unwrap();
    assert_eq!(b, first_bad);
}

fn block_truth(seed: u64) -> (TrueModel, Dataset) {
    let mut rng = RngStream::new(seed, 0).rng();
    let tm = make_true_model(Scenario::Block5, 20, &ScenarioOptions::default(), &mut rng).unwrap();
    let d = sample_dataset(&tm, 200, &mut rng).unwrap();
    (tm, d)
}

#[test]
fn single_candidate_is_returned_with_trace() {
    let (tm, d) = block_truth(1);
    let g = Generator::oracle(tm, 200);
    let opts = SelectionOptions { replicates: 5, ..Default::default() };
    let cands = [Candidate { name: "oracle".into(), source: &g }];
    let r = tune_selection(&cands, &[0.7], &d, &opts, 2).unwrap();
    assert_eq!(r.threshold, 0.7);
    assert_eq!(r.tuning_trace.len(), 1);
    assert_eq!(r.active_set, r.tuning_trace[0].active_set);
}

#[test]
fn equal_sets_break_ties_toward_larger_threshold() {
    let (tm, d) = block_truth(2);
    let g = Generator::oracle(tm, 200);
    let opts = SelectionOptions { replicates: 4, ..Default::default() };
    let cands = [Candidate { name: "oracle".into(), source: &g }, Candidate { name: "again".into(), source: &g }];
    let r = tune_selection(&cands, &DEFAULT_THRESHOLDS, &d, &opts, 5).unwrap();
    assert_eq!(r.tuning_trace.len(), 10);
    let best = r.tuning_trace.iter().filter_map(|e| e.ebic).fold(f64::INFINITY, f64::min);
    let tied_thresholds: Vec<f64> = r
        .tuning_trace
        .iter()
        .filter(|e| e.ebic == Some(best) && e.active_set == r.active_set)
        .map(|e| e.pi_thres)
        .collect();
    assert_eq!(r.threshold, tied_thresholds.iter().cloned().fold(f64::MIN, f64::max));
    // With B = 4 the frequencies sit on quarters, so 0.6 and 0.7 always give the same set.
    let (e6, e7) = (&r.tuning_trace[1], &r.tuning_trace[2]);
    assert_eq!(e6.active_set, e7.active_set);
    assert_eq!(e6.ebic, e7.ebic);
    if r.active_set == e6.active_set {
        assert!(r.threshold >= 0.7);
    }
}

#[test]
fn empty_candidate_lists_rejected() {
    let (_, d) = block_truth(3);
    let opts = SelectionOptions::default();
    assert!(matches!(tune_selection(&[], &[0.7], &d, &opts, 0), Err(AggregateError::NoCandidates)));
    assert!(matches!(tune_with_fid(&[], &d, 10, 0), Err(AggregateError::NoCandidates)));
}

/// Returns the column means of a reference dataset for every row.
struct Constant(Dataset);

impl ReplicateSource for Constant {
    fn n_syn(&self) -> usize {
        self.0.n()
    }
    fn sample(&self, n: usize, _rng: &mut StreamRng) -> Result<Dataset, AggregateError> {
        let v = self.0.values();
        let means: Vec<f64> = (0..v.cols()).map(|j| v.column(j).iter().sum::<f64>() / v.rows() as f64).collect();
        Ok(Dataset::new(self.0.schema().clone(), Matrix::from_fn(n, v.cols(), |_, j| means[j]))?)
    }
}

/// Bootstrap rows, then shuffle every column independently: right marginals, no correlation.
struct ColumnShuffled(Dataset);

impl ReplicateSource for ColumnShuffled {
    fn n_syn(&self) -> usize {
        self.0.n()
    }
    fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset, AggregateError> {
        let v = self.0.values();
        let mut out = Matrix::zeros(n, v.cols());
        for j in 0..v.cols() {
            let mut col: Vec<f64> = (0..n).map(|_| v[(rng.index(v.rows()), j)]).collect();
            rng.shuffle(&mut col);
            out.set_column(j, &col);
        }
        Ok(Dataset::new(self.0.schema().clone(), out)?)
    }
}

#[test]
fn fid_closed_forms() {
    let m = vec![0.3, -1.0];
    let c = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
    assert!(frechet_distance(&m, &c, &m, &c).unwrap().abs() < 1e-12);
    // (0 − 1)² + 1 + 4 − 2·√4 = 2
    let d = frechet_distance(&[0.0], &Matrix::from_rows(&[vec![1.0]]), &[1.0], &Matrix::from_rows(&[vec![4.0]])).unwrap();
    assert!((d - 2.0).abs() < 1e-9);
}

#[test]
fn fid_prefers_faithful_generators() {
    for seed in 0..10 {
        let (tm, d) = block_truth(seed);
        let oracle = Generator::oracle(tm, 200);
        let stub = Constant(d.clone());
        let (best, scores) = tune_with_fid(&[&stub, &oracle], &d, 200, seed).unwrap();
        assert_eq!(best, 1, "seed {seed}: {scores:?}");

        let boot = Generator::bootstrap(std::sync::Arc::new(d.clone()));
        let shuffled = ColumnShuffled(d.clone());
        let (best, scores) = tune_with_fid(&[&shuffled, &boot], &d, 200, seed).unwrap();
        assert_eq!(best, 1, "seed {seed}: {scores:?}");
    }
    let (tm, d) = block_truth(0);
    let oracle = Generator::oracle(tm, 200);
    let (best, scores) = tune_with_fid(&[&oracle, &oracle], &d, 50, 1).unwrap();
    assert_eq!(best, 0);
    assert_eq!(scores[0], scores[1]);
    assert!(tune_with_fid(&[&oracle], &d, 1, 1).is_err());
}

#[test]
fn inference_flags_strong_signal_and_respects_null() {
    let mut false_flags = 0usize;
    let mut null_flags = 0usize;
    for seed in 0..10 {
        let mut beta = vec![0.0; 30];
        beta[..5].copy_from_slice(&[1.0, -1.0, 0.8, -0.8, 1.2]);
        let g = Generator::oracle(iid_model(30, beta, 1.0, 300), 300);
        let r = run_inference(&g, 20, 0.05, seed).unwrap();
        assert!((0..5).all(|j| r.significant.contains(&j)), "seed {seed}: {:?}", r.significant);
        false_flags += r.significant.iter().filter(|&&j| j >= 5).count();
        assert_eq!(r.t_stats.rows(), 20);

        let null = Generator::oracle(iid_model(30, vec![0.0; 30], 1.0, 300), 300);
        null_flags += run_inference(&null, 20, 0.05, seed).unwrap().significant.len();
    }
    assert!(false_flags as f64 / 250.0 <= 0.10);
    assert!(null_flags as f64 / 300.0 <= 0.10);
}

#[test]
fn inference_rejects_rank_deficient_replicates() {
    let g = Generator::oracle(iid_model(30, vec![0.0; 30], 1.0, 20), 20);
    assert!(matches!(run_inference(&g, 3, 0.05, 0), Err(AggregateError::Replicate { b: 1, .. })));
}

#[test]
fn chain_graph_is_recovered() {
    let truth = make_chain(3, 0.45).unwrap();
    let g = Generator::graph_oracle(truth.clone(), 500);
    let opts = GraphOptions { replicates: 10, ..Default::default() };
    let r = run_graph_selection(&g, &opts, 4).unwrap();
    for (i, j) in truth.edges() {
        assert_eq!(r.edge_pi_hat[(i, j)], 1.0);
    }
    assert_eq!(r.edge_set, truth.edges());
}

#[test]
fn empty_graph_and_rule_containment() {
    let truth = make_empty_graph(10).unwrap();
    let g = Generator::graph_oracle(truth, 200);
    let mut empty = 0;
    for seed in 0..10 {
        let or = run_graph_selection(&g, &GraphOptions { replicates: 10, ..Default::default() }, seed).unwrap();
        let and = run_graph_selection(
            &g,
            &GraphOptions { replicates: 10, rule: GraphRule::And, ..Default::default() },
            seed,
        )
        .unwrap();
        assert!(and.edge_set.iter().all(|e| or.edge_set.contains(e)));
        for i in 0..10 {
            for j in 0..10 {
                assert!(and.edge_pi_hat[(i, j)] <= or.edge_pi_hat[(i, j)]);
            }
        }
        empty += usize::from(or.edge_set.is_empty());
    }
    assert!(empty >= 9, "{empty}/10");
}
