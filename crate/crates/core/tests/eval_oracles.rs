use absa_lab::eval::{accuracy, aggregate_runs, categorize_scenario, grid, macro_f1, ScenarioCategory};
use absa_lab::{Domain, DomainSet, Polarity};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Precision/recall form of F1, computed straight from label pairs.
fn oracle(golds: &[Polarity], preds: &[Polarity]) -> (f64, f64) {
    let n = golds.len() as f64;
    let correct = golds.iter().zip(preds).filter(|(g, p)| g == p).count() as f64;
    let mut f1s = 0.0;
    for k in Polarity::ALL {
        let tp = golds.iter().zip(preds).filter(|(g, p)| **g == k && **p == k).count() as f64;
        let pred_k = preds.iter().filter(|p| **p == k).count() as f64;
        let gold_k = golds.iter().filter(|g| **g == k).count() as f64;
        let precision = if pred_k > 0.0 { tp / pred_k } else { 0.0 };
        let recall = if gold_k > 0.0 { tp / gold_k } else { 0.0 };
        f1s += if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    }
    (correct / n, f1s / 3.0)
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, weights: [f64; 3]) -> Vec<Polarity> {
    let dist = rand::distributions::WeightedIndex::new(weights).unwrap();
    (0..n).map(|_| Polarity::ALL[rng.sample(&dist)]).collect()
}

#[test]
fn metrics_match_confusion_oracle_on_thousand_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let n = rng.gen_range(1..200);
        let w = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.01..1.0)];
        let golds = random_labels(&mut rng, n, w);
        let preds = if rng.gen_bool(0.3) {
            golds.iter().map(|&g| if rng.gen_bool(0.8) { g } else { Polarity::ALL[rng.gen_range(0..3)] }).collect()
        } else {
            random_labels(&mut rng, n, [1.0, 1.0, 1.0])
        };
        let (acc, mf1) = oracle(&golds, &preds);
        assert!((accuracy(&preds, &golds).unwrap() - acc).abs() <= 1e-12);
        assert!((macro_f1(&preds, &golds).unwrap() - mf1).abs() <= 1e-12);
    }
}

#[test]
fn all_positive_on_balanced_gold_is_one_sixth() {
    let golds: Vec<Polarity> = Polarity::ALL.iter().cycle().take(300).copied().collect();
    let preds = vec![Polarity::Positive; 300];
    assert_eq!(macro_f1(&preds, &golds).unwrap(), 1.0 / 6.0);
    assert!((accuracy(&preds, &golds).unwrap() - 1.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn metrics_invariant_under_permutation_and_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..80);
        let golds = random_labels(&mut rng, n, [1.0, 1.0, 1.0]);
        let preds = random_labels(&mut rng, n, [2.0, 1.0, 1.0]);
        let (acc, mf1) = (accuracy(&preds, &golds).unwrap(), macro_f1(&preds, &golds).unwrap());

        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let g2: Vec<_> = idx.iter().map(|&i| golds[i]).collect();
        let p2: Vec<_> = idx.iter().map(|&i| preds[i]).collect();
        assert_eq!(accuracy(&p2, &g2).unwrap(), acc);
        assert!((macro_f1(&p2, &g2).unwrap() - mf1).abs() <= 1e-12);

        let mut sigma = Polarity::ALL;
        sigma.shuffle(&mut rng);
        let relabel = |v: &[Polarity]| v.iter().map(|p| sigma[p.index()]).collect::<Vec<_>>();
        assert_eq!(accuracy(&relabel(&preds), &relabel(&golds)).unwrap(), acc);
        assert!((macro_f1(&relabel(&preds), &relabel(&golds)).unwrap() - mf1).abs() <= 1e-12);
    }
}

#[test]
fn aggregate_matches_streaming_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let n = rng.gen_range(2..20);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..0.95)).collect();
        let (mut count, mut m, mut m2) = (0.0, 0.0, 0.0);
        for &x in &xs {
            count += 1.0;
            let d = x - m;
            m += d / count;
            m2 += d * (x - m);
        }
        let (mean, std) = aggregate_runs(&xs).unwrap();
        assert!((mean - m).abs() <= 1e-12);
        assert!((std - (m2 / (count - 1.0)).sqrt()).abs() <= 1e-12);
    }
    assert!(aggregate_runs(&[0.5]).is_err());
}

#[test]
fn taxonomy_partitions_the_grid() {
    let cells = grid();
    assert_eq!(cells.len(), 18);
    let count = |c: ScenarioCategory| cells.iter().filter(|s| s.category() == c).count();
    assert_eq!(count(ScenarioCategory::InDomain), 6);
    assert_eq!(count(ScenarioCategory::CrossDomain), 4);
    assert_eq!(count(ScenarioCategory::CrossDomainAdaptation), 2);
    assert_eq!(count(ScenarioCategory::JointDomain), 6);
    let adaptation: Vec<_> = cells.iter().filter(|s| s.category() == ScenarioCategory::CrossDomainAdaptation).collect();
    for s in adaptation {
        assert_eq!(s.d_lm.single(), Some(s.d_test));
        assert_ne!(s.d_train.single(), Some(s.d_test));
    }
    let fully_matched = cells
        .iter()
        .filter(|s| s.category() == ScenarioCategory::InDomain && s.d_lm.single() == Some(s.d_test))
        .count();
    assert_eq!(fully_matched, 2);
    assert_eq!(
        categorize_scenario(DomainSet::Laptops, DomainSet::Restaurants, Domain::Laptops),
        ScenarioCategory::CrossDomainAdaptation
    );
}
