//! Batch, repeated, and bootstrap estimation drivers.

use trajcluster::dataset::simulate_pap;
use trajcluster::harness::{boot_sample, run_batch, run_boot, run_rep};
use trajcluster::method::{estimate, MethodSpec};
use trajcluster::metrics::internal_metric_value;
use trajcluster::rng::child_seed;
use trajcluster::ArgValue;

fn spec(method: &str, k: i64) -> MethodSpec {
    MethodSpec::new(method, [("nClusters", ArgValue::Int(k))]).unwrap()
}

#[test]
fn batch_runs_every_spec_in_order() {
    let (ds, _) = simulate_pap(40, 6, 1).unwrap();
    let specs = spec("lmkm", 1)
        .permute("nClusters", vec![1i64, 2, 3, 4, 5, 6])
        .unwrap();
    let run = run_batch(&specs, &ds, 1, false).unwrap();
    assert_eq!(run.entries.len(), 6);
    let models = run.models();
    assert_eq!(models.len(), 6);
    for (i, m) in models.models().enumerate() {
        assert_eq!(m.spec().int("nClusters"), Some(i as i64 + 1));
        assert_eq!(m.k(), i + 1);
        // Each model records its own child seed.
        assert_eq!(m.seed(), child_seed(1, "batch", i as u64));
    }
    assert_eq!(
        models.names().collect::<Vec<_>>(),
        vec!["1", "2", "3", "4", "5", "6"]
    );
}

#[test]
fn single_spec_batch_equals_direct_estimate() {
    let (ds, _) = simulate_pap(30, 5, 2).unwrap();
    let s = spec("kml", 3);
    let run = run_batch(std::slice::from_ref(&s), &ds, 7, false).unwrap();
    let direct = estimate(&s, &ds, child_seed(7, "batch", 0)).unwrap();
    let batched = run.models();
    assert_eq!(batched.get(0).unwrap().postprob(), direct.postprob());
}

#[test]
fn parallel_and_sequential_batches_agree_bitwise() {
    let (ds, _) = simulate_pap(60, 8, 3).unwrap();
    let mut specs = Vec::new();
    for k in 1..=3 {
        specs.push(spec("kml", k));
        specs.push(spec("gbtm", k));
    }
    let seq = run_batch(&specs, &ds, 11, false).unwrap();
    let par = run_batch(&specs, &ds, 11, true).unwrap();
    for (a, b) in seq.entries.iter().zip(&par.entries) {
        let (ma, mb) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
        assert_eq!(
            ma.to_json_string(false),
            mb.to_json_string(false),
            "parallel and sequential models differ"
        );
    }
}

#[test]
fn failed_fits_are_recorded_and_the_batch_continues() {
    let (ds, _) = simulate_pap(10, 5, 4).unwrap();
    // K = 20 > N = 10 is infeasible; the other spec succeeds.
    let specs = vec![spec("kml", 20), spec("kml", 2)];
    let run = run_batch(&specs, &ds, 1, false).unwrap();
    assert_eq!(run.entries.len(), 2);
    assert!(run.entries[0].outcome.is_err());
    assert!(run.entries[1].outcome.is_ok());
    assert_eq!(run.failures().count(), 1);
    let manifest = run.manifest_value(&|_, _| None);
    let statuses: Vec<&str> = manifest
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["status"].as_str().unwrap())
        .collect();
    assert!(statuses[0].starts_with("error:"));
    assert_eq!(statuses[1], "ok");
}

#[test]
fn rep_produces_the_requested_number_of_fits() {
    let (ds, _) = simulate_pap(40, 6, 5).unwrap();
    let run = run_rep(&spec("kml", 3), &ds, 5, 9, false).unwrap();
    assert_eq!(run.entries.len(), 5);
    // Child seeds differ, so fits may differ; rep 1 equals a direct estimate.
    let single = run_rep(&spec("kml", 3), &ds, 1, 9, false).unwrap();
    let direct = estimate(&spec("kml", 3), &ds, child_seed(9, "rep", 0)).unwrap();
    assert_eq!(
        single.models().get(0).unwrap().postprob(),
        direct.postprob()
    );
}

#[test]
fn deterministic_backends_repeat_identically() {
    let (ds, _) = simulate_pap(40, 6, 6).unwrap();
    let s = MethodSpec::new("stratify", [("rule", ArgValue::from("mean > 4"))]).unwrap();
    let run = run_rep(&s, &ds, 4, 3, true).unwrap();
    let models = run.models();
    let first = models.get(0).unwrap();
    let wmae0 = internal_metric_value(first, "WMAE").unwrap();
    for m in models.models() {
        assert_eq!(m.postprob(), first.postprob());
        assert_eq!(internal_metric_value(m, "WMAE").unwrap(), wmae0);
    }
}

#[test]
fn boot_samples_have_n_trajectories_and_rebuild_exactly() {
    let (ds, _) = simulate_pap(50, 5, 7).unwrap();
    let (sample, recipe) = boot_sample(&ds, 123).unwrap();
    assert_eq!(sample.n_trajectories(), 50);
    assert_eq!(recipe.drawn_ids.len(), 50);
    let again = recipe.rebuild(&ds).unwrap();
    assert_eq!(sample, again);
}

#[test]
fn boot_run_attaches_recipes_and_reproduces() {
    let (ds, _) = simulate_pap(40, 6, 8).unwrap();
    let a = run_boot(&spec("kml", 3), &ds, 10, 5, false).unwrap();
    let b = run_boot(&spec("kml", 3), &ds, 10, 5, true).unwrap();
    assert_eq!(a.entries.len(), 10);
    for (ea, eb) in a.entries.iter().zip(&b.entries) {
        assert_eq!(ea.recipe, eb.recipe);
        let (ma, mb) = (ea.outcome.as_ref().unwrap(), eb.outcome.as_ref().unwrap());
        assert_eq!(ma.to_json_string(false), mb.to_json_string(false));
        // Re-estimating from the recipe reproduces the model bit for bit.
        let rebuilt = ea.recipe.as_ref().unwrap().rebuild(&ds).unwrap();
        let again = estimate(&ea.spec, &rebuilt, ea.seed).unwrap();
        assert_eq!(again.to_json_string(false), ma.to_json_string(false));
    }
    assert_eq!(a.convergence_rate(), 1.0);
}

#[test]
fn boot_truth_labels_follow_duplicated_ids() {
    let (ds, _) = simulate_pap(30, 4, 9).unwrap();
    let (sample, _) = boot_sample(&ds, 77).unwrap();
    let truth = sample.truth().expect("truth carried over");
    for id in sample.ids() {
        assert!(truth.label_of(id).is_some(), "no label for {id}");
    }
    // Suffixed duplicates keep the source trajectory's label.
    let dup = sample.ids().find(|id| id.contains('#'));
    if let Some(dup) = dup {
        let source = dup.split('#').next().unwrap();
        assert_eq!(truth.label_of(dup), ds.truth().unwrap().label_of(source));
    }
}

#[test]
fn empty_inputs_are_rejected() {
    let (ds, _) = simulate_pap(10, 4, 1).unwrap();
    assert!(run_batch(&[], &ds, 1, false).is_err());
    assert!(run_rep(&spec("kml", 2), &ds, 0, 1, false).is_err());
    assert!(run_boot(&spec("kml", 2), &ds, 0, 1, false).is_err());
}
