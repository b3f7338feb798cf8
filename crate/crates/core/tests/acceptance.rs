//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any criterion fails.
//!
//! ```bash
//! cargo test --release --test acceptance
//! ```

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlnewton::assemble::{
    aligned_energy_distance, assemble_forms, interpolate, rayleigh_quotient, AssembledForms,
    CoefficientSet,
};
use mlnewton::cli::cmd_bench;
use mlnewton::config::RunConfig;
use mlnewton::eigen_newton::{
    coarse_solve, newton_step_multi, newton_step_single, rayleigh_expansion_check, NewtonOptions,
};
use mlnewton::linalg::{dense_gen_eig, solve_bordered, BorderedMatrix, BorderedOptions, SparseSym};
use mlnewton::mesh::{build_hierarchy, unit_square_divisions, unit_square_mesh, MeshHierarchy};
use mlnewton::multilevel::{
    assemble_levels, compare_with_direct, run_multilevel, ComparedRecord, MultilevelOptions,
    Reference,
};
use mlnewton::reference::{direct_solve, direct_solve_with, exact_laplace, DirectOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn laplace_hierarchy() -> MeshHierarchy {
    build_hierarchy(unit_square_mesh(1.0 / 6.0).unwrap(), 4).unwrap()
}

fn exact_options(m: usize) -> MultilevelOptions {
    MultilevelOptions {
        reference: Reference::Exact(exact_laplace(m).unwrap()),
        ..Default::default()
    }
}

/// Every Laplace eigenvalue emitted anywhere in the suite, with its exact value.
#[derive(Default)]
struct LowerBoundLog {
    entries: Vec<(String, f64, f64)>,
}

impl LowerBoundLog {
    fn record(&mut self, source: &str, values: &[f64]) {
        let exact = exact_laplace(values.len()).unwrap();
        for (v, e) in values.iter().zip(exact) {
            self.entries.push((source.to_string(), *v, e.value));
        }
    }
}

fn criterion_1(log: &mut LowerBoundLog) -> Outcome {
    let hier = laplace_hierarchy();
    let start = Instant::now();
    let rec = single_threaded(|| run_multilevel(&hier, &CoefficientSet::laplace(), 1, &exact_options(1)).unwrap());
    let elapsed = start.elapsed().as_secs_f64();
    for r in &rec.levels {
        log.record("criterion 1 multilevel", &r.eigenvalues);
    }
    let order = rec.observed_orders[0].unwrap_or(f64::NAN);
    let energy = rec.energy_orders[0].unwrap_or(f64::NAN);
    let pass = (order - 2.0).abs() <= 0.2 && (energy - 1.0).abs() <= 0.15 && elapsed <= 60.0;
    outcome(
        pass,
        format!("eigenvalue order {order:.4} (2 ± 0.2), energy order {energy:.4} (1 ± 0.15), {elapsed:.2} s (≤ 60 s)"),
    )
}

fn criterion_2(cmp: &ComparedRecord) -> Outcome {
    let hier = laplace_hierarchy();
    let finest = hier.finest();
    let forms = assemble_forms(finest, &CoefficientSet::laplace(), 2).unwrap();
    let e = exact_laplace(1).unwrap()[0];
    let d = cmp.direct.last().unwrap();
    let lam_dir = d.direct_values[0];
    let value_ratio = d.value_diffs[0] / (lam_dir - e.value).abs();
    let u_dir = &cmp.direct_sets.last().unwrap().pairs[0].vector;
    let interp = interpolate(|p| e.u(p), finest).unwrap();
    let disc = aligned_energy_distance(&forms, u_dir, &interp).unwrap();
    let vector_ratio = d.energy_diffs[0] / disc;
    outcome(
        value_ratio <= 0.05 && vector_ratio <= 0.1,
        format!(
            "|λ_ml - λ_dir| / |λ_dir - 2π²| = {value_ratio:.3e} (≤ 0.05), ‖u_ml - u_dir‖_a / ‖u_dir - I_h u‖_a = {vector_ratio:.3e} (≤ 0.1)"
        ),
    )
}

fn criterion_3(log: &mut LowerBoundLog) -> Outcome {
    let hier = laplace_hierarchy();
    let rec = run_multilevel(&hier, &CoefficientSet::laplace(), 6, &exact_options(6)).unwrap();
    for r in &rec.levels {
        log.record("criterion 3 multilevel", &r.eigenvalues);
    }
    let orders: Vec<f64> = rec.observed_orders.iter().map(|o| o.unwrap_or(f64::NAN)).collect();
    let orders_ok = orders.iter().all(|o| (o - 2.0).abs() <= 0.3);
    let mut pair_ok = true;
    let mut worst_pair: f64 = 0.0;
    for r in &rec.levels {
        for (i, j) in [(1, 2), (4, 5)] {
            let split = (r.eigenvalues[i] - r.eigenvalues[j]).abs();
            let bound = 2.0 * r.eigenvalue_errors[i].unwrap().min(r.eigenvalue_errors[j].unwrap());
            worst_pair = worst_pair.max(split / bound);
            pair_ok &= split <= bound;
        }
    }
    let list: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
    outcome(
        orders_ok && pair_ok,
        format!(
            "orders [{}] (2 ± 0.3); worst cluster split / (2 × smaller error) = {worst_pair:.3} (≤ 1)",
            list.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let hier = laplace_hierarchy();
    let opts = MultilevelOptions {
        quad_order: 5,
        reference: Reference::Extrapolated,
        ..Default::default()
    };
    let cmp = compare_with_direct(&hier, &CoefficientSet::example2(), 6, &opts).unwrap();
    let orders: Vec<f64> = cmp.multilevel.observed_orders.iter().map(|o| o.unwrap_or(f64::NAN)).collect();
    let d = cmp.direct.last().unwrap();
    let worst = d
        .value_diffs
        .iter()
        .zip(&d.direct_values)
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max);
    let list: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
    outcome(
        orders.iter().all(|o| (o - 2.0).abs() <= 0.3) && worst <= 1e-4,
        format!("orders [{}] (2 ± 0.3); finest max |λ_ml - λ_dir| / λ_dir = {worst:.3e} (≤ 1e-4)", list.join(", ")),
    )
}

fn criterion_5(log: &mut LowerBoundLog) -> Outcome {
    let hier = laplace_hierarchy();
    let levels = assemble_levels(&hier, &CoefficientSet::laplace(), 2).unwrap();
    let mut pair = coarse_solve(&levels.forms[0], 1).unwrap().pairs.remove(0);
    let mut ratios = Vec::new();
    for k in 1..levels.forms.len() {
        let forms = &levels.forms[k];
        let lift = &levels.lifts[k - 1];
        let exact = direct_solve(forms, 1).unwrap().pairs.remove(0);
        log.record("criterion 5 direct", &[exact.value]);
        let before = aligned_energy_distance(forms, &exact.vector, &lift.mul_vec(&pair.vector)).unwrap();
        let step = newton_step_single(forms, &pair, lift, &NewtonOptions::default()).unwrap();
        log.record("criterion 5 newton", &[step.pair.value]);
        let after = aligned_energy_distance(forms, &exact.vector, &step.pair.vector).unwrap();
        ratios.push(after / (before * before));
        pair = step.pair;
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let variation = (max - min) / min;
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.3e}")).collect();
    outcome(
        ratios.iter().all(|r| r.is_finite()) && variation <= 0.5,
        format!("ratios [{}], (max - min) / min = {variation:.3} (≤ 0.5)", list.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let forms = assemble_forms(&unit_square_mesh(0.125).unwrap(), &CoefficientSet::laplace(), 2).unwrap();
    let exact = coarse_solve(&forms, 1).unwrap().pairs.remove(0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let scale = 10f64.powf(-3.0 + 3.0 * (t as f64) / 99.0);
        let psi: Vec<f64> = exact.vector.iter().map(|u| u + scale * rng.gen_range(-1.0..1.0)).collect();
        let r = rayleigh_expansion_check(&forms, &psi, &exact).unwrap();
        worst = worst.max(r / exact.value);
    }
    outcome(worst <= 1e-10, format!("max residual / λ̄ over 100 perturbations = {worst:.3e} (≤ 1e-10)"))
}

fn criterion_7(log: &mut LowerBoundLog) -> Outcome {
    for m in [2, 4, 6, 8, 12] {
        let forms = assemble_forms(&unit_square_divisions(m).unwrap(), &CoefficientSet::laplace(), 2).unwrap();
        let k = 6.min(forms.n_free);
        log.record("coarse_solve", &coarse_solve(&forms, k).unwrap().values());
        log.record("direct_solve", &direct_solve(&forms, k).unwrap().values());
    }
    let levels = assemble_levels(&laplace_hierarchy(), &CoefficientSet::laplace(), 2).unwrap();
    let mut set = coarse_solve(&levels.forms[0], 6).unwrap();
    for k in 1..levels.forms.len() {
        set = newton_step_multi(&levels.forms[k], &set, &levels.lifts[k - 1], &NewtonOptions::default())
            .unwrap()
            .set;
        log.record("newton_step_multi", &set.values());
        log.record("direct_solve", &direct_solve(&levels.forms[k], 6).unwrap().values());
    }
    let violations: Vec<&(String, f64, f64)> = log.entries.iter().filter(|(_, v, e)| *v < e - 1e-9).collect();
    let margin = log.entries.iter().map(|(_, v, e)| v - e).fold(f64::INFINITY, f64::min);
    outcome(
        violations.is_empty(),
        format!(
            "{} eigenvalues checked, {} below exact - 1e-9, smallest λ - λ_exact = {margin:.3e}",
            log.entries.len(),
            violations.len()
        ),
    )
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng, density: f64) -> DMatrix<f64> {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(density) {
                let v = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    for i in 0..n {
        let row: f64 = (0..n).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = row + rng.gen_range(0.1..1.0);
    }
    a
}

fn to_sparse(a: &DMatrix<f64>) -> SparseSym {
    let n = a.nrows();
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] != 0.0 {
                trip.push((i, j, a[(i, j)]));
            }
        }
    }
    SparseSym::from_triplets(n, &trip).unwrap()
}

fn criterion_8() -> Outcome {
    let no_fallback = DirectOptions {
        dense_fallback_below: 0,
        ..Default::default()
    };
    let mut worst_eig: f64 = 0.0;
    let mut meshes = 0;
    let mut forms_list: Vec<AssembledForms> = Vec::new();
    for m in 2..=18 {
        forms_list.push(assemble_forms(&unit_square_divisions(m).unwrap(), &CoefficientSet::laplace(), 2).unwrap());
    }
    for m in [3, 5, 8, 12, 17] {
        forms_list.push(assemble_forms(&unit_square_divisions(m).unwrap(), &CoefficientSet::example2(), 5).unwrap());
    }
    for level in build_hierarchy(unit_square_mesh(0.5).unwrap(), 4).unwrap().levels() {
        forms_list.push(assemble_forms(level, &CoefficientSet::laplace(), 2).unwrap());
    }
    for forms in forms_list.iter().filter(|f| f.n_free <= 300) {
        meshes += 1;
        let dense = dense_gen_eig(&forms.stiffness.to_dense(), &forms.mass.to_dense()).unwrap();
        let k = 6.min(forms.n_free);
        let sparse = direct_solve_with(forms, k, &no_fallback).unwrap();
        for (a, b) in dense.values.iter().zip(sparse.values()) {
            worst_eig = worst_eig.max((a - b).abs() / a.abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_bordered: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=50);
        let m = rng.gen_range(1..=4.min(n - 1));
        let a = random_spd(n, &mut rng, 0.2);
        let b = random_spd(n, &mut rng, 0.1);
        let mu = rng.gen_range(0.0..0.5) * a.trace() / b.trace();
        let core = &a - &b * mu;
        let border: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let matrix = BorderedMatrix::new(to_sparse(&core), border.clone()).unwrap();
        let sol = solve_bordered(&matrix, &f, &g, &BorderedOptions::default()).unwrap();

        let mut full = DMatrix::<f64>::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&core);
        for (s, col) in border.iter().enumerate() {
            for i in 0..n {
                full[(i, n + s)] = -col[i];
                full[(n + s, i)] = -col[i];
            }
        }
        let rhs = DVector::from_iterator(n + m, f.iter().copied().chain(g.iter().map(|v| -v)));
        let x = full.lu().solve(&rhs).unwrap();
        let ours = DVector::from_iterator(n + m, sol.w.iter().chain(&sol.gamma).copied());
        worst_bordered = worst_bordered.max((&ours - &x).amax() / x.amax());
    }
    outcome(
        worst_eig <= 1e-9 && worst_bordered <= 1e-10,
        format!(
            "eigenvalues on {meshes} meshes: max rel diff {worst_eig:.3e} (≤ 1e-9); bordered, 50 instances: max rel diff {worst_bordered:.3e} (≤ 1e-10)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        benchmark: true,
        bench_max_levels: 6,
        output: dir.path().join("bench"),
        ..Default::default()
    };
    let report = cmd_bench(&cfg).unwrap();
    let exponent = report.exponent.unwrap_or(f64::NAN);
    // ratios N_{k+1}/N_k over levels 2..6
    let ratios = &report.n_ratios[1..];
    let ratios_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let largest = report.runs.last().unwrap();
    let solve_ratios: Vec<String> = largest
        .levels
        .windows(2)
        .skip(2)
        .map(|w| format!("{:.2}", w[1].2 / w[0].2))
        .collect();
    let list: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    outcome(
        exponent <= 1.5 && ratios_ok,
        format!(
            "exponent {exponent:.3} (≤ 1.5, fit residual {:.3}); N ratios [{}] (in [3.5, 4.5]); solve-time ratios for k ≥ 3: [{}]",
            report.fit_residual.unwrap_or(f64::NAN),
            list.join(", "),
            solve_ratios.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let mut log = LowerBoundLog::default();
    let hier = laplace_hierarchy();
    let cmp = compare_with_direct(&hier, &CoefficientSet::laplace(), 1, &exact_options(1)).unwrap();
    for d in &cmp.direct {
        log.record("criterion 2 direct", &d.direct_values);
    }
    for r in &cmp.multilevel.levels {
        log.record("criterion 2 multilevel", &r.eigenvalues);
        let forms = assemble_forms(hier.level(r.level - 1), &CoefficientSet::laplace(), 2).unwrap();
        let v = &cmp.direct_sets[r.level - 1].pairs[0].vector;
        assert!((rayleigh_quotient(&forms, v).unwrap() - cmp.direct[r.level - 1].direct_values[0]).abs() < 1e-9);
    }

    let results = [
        ("1 Laplace convergence rates", criterion_1(&mut log)),
        ("2 multilevel matches direct", criterion_2(&cmp)),
        ("3 six Laplace eigenvalues", criterion_3(&mut log)),
        ("4 variable-coefficient problem", criterion_4()),
        ("5 quadratic Newton contraction", criterion_5(&mut log)),
        ("6 Rayleigh quotient expansion", criterion_6()),
        ("7 min-max lower bound", criterion_7(&mut log)),
        ("8 oracle equivalence", criterion_8()),
        ("9 work trend", criterion_9()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
