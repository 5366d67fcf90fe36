//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `--nocapture`).
//!
//! Criteria 1-4 run on the full experiment battery (m = 2000, n = 200,
//! seed fixed). Criterion 5 runs per class in the regime where the centered
//! data has full numerical resolution (every retained mode well above the
//! rank cutoff); the route equivalence is an identity of pseudoinverses
//! through the complete retained spectrum, so datasets whose spectra decay
//! smoothly through the cutoff are sampled with few enough instances that
//! sampling, not machine precision, limits the rank. Criteria 6-8 use
//! brute-force oracles on small instances, and 9-10 cover the surrogates
//! and end-to-end reproducibility.

use std::process::Command;
use std::sync::LazyLock;
use std::time::Instant;

use egpc_core::{
    build_dataset, crv, error_report, fit_parameter_map, fit_pca, min_components, project,
    reconstruct, split, unvectorize, vectorize, verify_equivalence, ClassErrorReport, DataMatrix,
    Dataset, GeometryClass, MassWeightConfig, ParameterMatrix, PcaModel, RPreset, Split,
};
use egpc_test_support::{
    center_columns, enlarged_block_matrix, general_eigenvalues, jacobi_eigh, pinv_psd,
    random_instance,
};
use nalgebra::{DMatrix, DVector};

const SEED: u64 = 7;
const BATTERY_M: usize = 2000;
const BATTERY_N: usize = 200;
const THRESHOLDS: [f64; 3] = [0.9, 0.95, 0.99];

const FIRST_SET: [GeometryClass; 3] = [
    GeometryClass::Rectangle,
    GeometryClass::Cuboid,
    GeometryClass::SimplifiedHelix,
];

struct ClassArtifacts {
    class: GeometryClass,
    ds: Dataset,
    split: Split,
    model: PcaModel,
    report: ClassErrorReport,
    /// component counts at the three thresholds
    t: [usize; 3],
    fit_seconds: f64,
}

struct Fixture {
    classes: Vec<ClassArtifacts>,
}

impl Fixture {
    fn class(&self, class: GeometryClass) -> &ClassArtifacts {
        self.classes
            .iter()
            .find(|c| c.class == class)
            .expect("every class is in the fixture")
    }
}

static FIXTURE: LazyLock<Fixture> = LazyLock::new(|| {
    let mut classes = Vec::new();
    for class in GeometryClass::ALL {
        let spec = class.spec_with_points(BATTERY_N);
        let started = Instant::now();
        let ds = build_dataset(&spec, BATTERY_M, SEED).expect("dataset builds");
        let sp = split(&ds, 0.9, SEED).expect("split");
        let x = ds.design_matrix_for(sp.train()).expect("train design matrix");
        let p = ds.parameter_matrix_for(sp.train()).expect("train parameters");
        let model = fit_pca(&x).expect("fit");
        let mut maps = Vec::new();
        for preset in RPreset::standard_set(&model, spec.k()).expect("presets") {
            let r = preset.resolve(&model, spec.k()).expect("preset resolves at full size");
            maps.push((preset, fit_parameter_map(&model, &x, &p, r).expect("map fits")));
        }
        let fit_seconds = started.elapsed().as_secs_f64();
        let test = ds.samples_for(sp.test()).expect("test samples");
        let report = error_report(class, &model, &maps, &test).expect("error report");
        let t = [
            min_components(&model, THRESHOLDS[0]).expect("t(0.9)"),
            min_components(&model, THRESHOLDS[1]).expect("t(0.95)"),
            min_components(&model, THRESHOLDS[2]).expect("t(0.99)"),
        ];
        classes.push(ClassArtifacts {
            class,
            ds,
            split: sp,
            model,
            report,
            t,
            fit_seconds,
        });
    }
    Fixture { classes }
});

fn mean_errors(report: &ClassErrorReport, preset: RPreset) -> &[f64] {
    report
        .preset(preset)
        .unwrap_or_else(|| panic!("preset {} missing for {}", preset.label(), report.class))
        .summary
        .mean_abs()
}

#[test]
fn c01_crv_table_first_set_exact() {
    let expected: [(GeometryClass, [usize; 3]); 3] = [
        (GeometryClass::Rectangle, [2, 2, 2]),
        (GeometryClass::Cuboid, [3, 3, 3]),
        (GeometryClass::SimplifiedHelix, [2, 2, 2]),
    ];
    let mut shown = Vec::new();
    for (class, want) in expected {
        let art = FIXTURE.class(class);
        assert_eq!(
            art.t, want,
            "criterion 01: {} reports t = {:?}, expected {:?}",
            class.name(),
            art.t,
            want
        );
        assert_eq!(
            art.model.rank(),
            art.ds.spec().k(),
            "criterion 01: {} should have exactly k eigenvalues above the cutoff",
            class.name()
        );
        shown.push(format!(
            "{} {:?} ({:.1}s gen+fit)",
            class.name(),
            art.t,
            art.fit_seconds
        ));
    }
    println!(
        "criterion 01 (CRV table first set, m = {BATTERY_M}, n = {BATTERY_N}): PASS - {}",
        shown.join(", ")
    );
}

#[test]
fn c02_crv_table_helix_property() {
    let helix = FIXTURE.class(GeometryClass::Helix);
    let simplified = FIXTURE.class(GeometryClass::SimplifiedHelix);
    let t99 = helix.t[2];
    assert!(t99 > 3, "criterion 02: t0.99(helix) = {t99} not > k = 3");
    assert!(
        t99 >= simplified.t[2] + 5,
        "criterion 02: t0.99(helix) = {t99} < t0.99(simplified) + 5 = {}",
        simplified.t[2] + 5
    );
    let soft = [10usize, 11, 12];
    for (i, want) in soft.iter().enumerate() {
        let got = helix.t[i] as i64 - *want as i64;
        assert!(
            got.abs() <= 3,
            "criterion 02: helix t at threshold {} is {} (soft target {want} +/- 3)",
            THRESHOLDS[i],
            helix.t[i]
        );
    }
    println!(
        "criterion 02 (helix spectrum): PASS - t = {:?} vs soft target {:?}, simplified t0.99 = {}",
        helix.t, soft, simplified.t[2]
    );
}

#[test]
fn c03_first_set_estimation_error_at_r_k() {
    let mut worst = 0.0f64;
    for class in FIRST_SET {
        let art = FIXTURE.class(class);
        for (j, &err) in mean_errors(&art.report, RPreset::ParamCount).iter().enumerate() {
            assert!(
                err < 1e-8,
                "criterion 03: {} parameter {j} mean |e| = {err:.3e} >= 1e-8",
                class.name()
            );
            worst = worst.max(err);
        }
    }
    println!(
        "criterion 03 (first-set error at r = k over {} test samples): PASS - worst mean |e| = {worst:.3e} < 1e-8",
        BATTERY_M / 10
    );
}

#[test]
fn c04_first_set_r200_not_better_than_r_k() {
    for class in FIRST_SET {
        let art = FIXTURE.class(class);
        // t_0.95 coincides with k for these classes, so that preset is
        // omitted from the study
        assert!(
            art.report.preset(RPreset::T95).is_none(),
            "criterion 04: {} should omit the t95 preset",
            class.name()
        );
        let at_k = mean_errors(&art.report, RPreset::ParamCount);
        let at_200 = mean_errors(&art.report, RPreset::Fixed(200));
        for j in 0..at_k.len() {
            assert!(
                at_200[j] >= at_k[j],
                "criterion 04: {} parameter {j}: mean |e| at r=200 ({:.3e}) < at r=k ({:.3e})",
                class.name(),
                at_200[j],
                at_k[j]
            );
        }
    }
    println!(
        "criterion 04 (first-set r-ordering): PASS - r = 200 never beats r = k \
         (sub-cutoff components are excluded, so the estimates coincide exactly)"
    );
}

#[test]
fn c05_equivalence_of_joint_and_standard_estimation() {
    // Full-resolution regimes per class: exact-rank classes at a convenient
    // size, smooth-spectrum classes sample-limited so that rank = m - 1
    // sits far above the cutoff.
    let regimes: [(GeometryClass, usize, usize); 6] = [
        (GeometryClass::Rectangle, 40, 200),
        (GeometryClass::Cuboid, 40, 200),
        (GeometryClass::SimplifiedHelix, 40, 200),
        (GeometryClass::Helix, 20, 10),
        (GeometryClass::FanBlade, 20, 10),
        (GeometryClass::Tube, 20, 10),
    ];
    let tol = 1e-10;
    let mut lines = Vec::new();
    for (class, n, m) in regimes {
        let spec = class.spec_with_points(n);
        let ds = build_dataset(&spec, m, SEED).unwrap();
        let x = ds.design_matrix().unwrap();
        let p = ds.parameter_matrix().unwrap();
        let mut worst_op = 0.0f64;
        let mut worst_probe = 0.0f64;
        for config_idx in 0..20u64 {
            let config = MassWeightConfig::random(n, SEED + 1000 * config_idx + 1);
            let report = verify_equivalence(&x, &p, &config, 100, tol, SEED + config_idx).unwrap();
            assert!(
                report.passed,
                "criterion 05: {} config {config_idx}: {report}",
                class.name()
            );
            worst_op = worst_op.max(report.operator_deviation);
            worst_probe = worst_probe.max(report.max_probe_deviation);
        }
        lines.push(format!(
            "{} op {worst_op:.1e} probe {worst_probe:.1e}",
            class.name()
        ));
    }

    // exit-code path through the CLI
    let dir = tempfile::tempdir().unwrap();
    let ds_path = dir.path().join("rect.egpc");
    let spec = GeometryClass::Rectangle.spec_with_points(40);
    build_dataset(&spec, 120, SEED).unwrap().save(&ds_path).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_egpc"))
        .args([
            "verify",
            "--dataset",
            ds_path.to_str().unwrap(),
            "--seed",
            "3",
            "--tol",
            "1e-10",
            "--configs",
            "20",
            "--probes",
            "100",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "criterion 05: cmd_verify exited nonzero: {}",
        String::from_utf8_lossy(&out.stdout)
    );

    println!(
        "criterion 05 (route equivalence, 20 configs x 100 probes per class, tol {tol:.0e}): PASS - {}; cmd_verify exit 0",
        lines.join("; ")
    );
}

#[test]
fn c06_enlarged_spectrum_on_small_instances() {
    let instances: [(GeometryClass, usize, usize); 3] = [
        (GeometryClass::Rectangle, 8, 40),  // l = 24, k = 2
        (GeometryClass::Cuboid, 10, 50),    // l = 30, k = 3
        (GeometryClass::SimplifiedHelix, 10, 30), // l = 30, k = 2
    ];
    let mut lines = Vec::new();
    for (class, n, m) in instances {
        let spec = class.spec_with_points(n);
        let k = spec.k();
        let l = 3 * n;
        let ds = build_dataset(&spec, m, SEED + 60).unwrap();
        let x = ds.design_matrix().unwrap();
        let p = ds.parameter_matrix().unwrap();
        let config = MassWeightConfig::random(n, SEED + 61);
        let jm = egpc_core::fit_joint_pca(&x, &p, &config).unwrap();
        let rank = jm.rank();
        assert_eq!(rank, k, "criterion 06: {} rank", class.name());

        let (x_mu, _) = center_columns(x.matrix());
        let (p_mu, _) = center_columns(p.matrix());
        let c_l = enlarged_block_matrix(&x_mu, &p_mu, &config.full_diagonal());
        assert_eq!(c_l.nrows(), l + k);
        let mut eigs = general_eigenvalues(&c_l);
        eigs.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());

        let lambda_1 = jm.eigenvalues()[0];
        for e in &eigs {
            assert!(
                e.im.abs() <= 1e-9 * lambda_1,
                "criterion 06: complex eigenvalue {e} in the enlarged spectrum"
            );
        }
        for i in 0..rank {
            let rel = (eigs[i].re - jm.eigenvalues()[i]).abs() / lambda_1;
            assert!(
                rel <= 1e-9,
                "criterion 06: {} eigenvalue {i} off by {rel:.3e} relative",
                class.name()
            );
        }
        let zeros = eigs[rank..]
            .iter()
            .filter(|e| e.re.abs() <= 1e-9 * lambda_1)
            .count();
        assert_eq!(
            zeros,
            k + (l - rank),
            "criterion 06: {} near-zero count",
            class.name()
        );
        lines.push(format!("{} rank {rank}, zeros {zeros}", class.name()));
    }
    println!("criterion 06 (enlarged block spectrum): PASS - {}", lines.join("; "));
}

#[test]
fn c07_pca_invariant_suite() {
    // orthonormality on every full-size model
    for art in FIXTURE.classes.iter() {
        let v = art.model.eigenvectors();
        let dev = (v.transpose() * v - DMatrix::identity(art.model.q(), art.model.q())).amax();
        assert!(
            dev < 1e-10,
            "criterion 07: {} orthonormality deviates by {dev:.3e}",
            art.class.name()
        );
    }

    // score variance, projector identity, CRV shape on randomized data
    for seed in [1u64, 2, 3] {
        let (x_raw, _) = random_instance(12, 1, 30, seed);
        let x = DataMatrix::from_matrix(x_raw).unwrap();
        let model = fit_pca(&x).unwrap();
        let m = x.n_samples();
        for i in 0..model.rank() {
            let scores: Vec<f64> = (0..m)
                .map(|j| project(&model, &x.column(j), model.rank()).unwrap()[i])
                .collect();
            let mean = scores.iter().sum::<f64>() / m as f64;
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
            let rel = (var - model.eigenvalues()[i]).abs() / model.eigenvalues()[i];
            assert!(rel < 1e-8, "criterion 07: var(y_{i}) off by {rel:.3e}");
        }
        for j in 0..m {
            let col = x.column(j);
            let rec = reconstruct(&model, &project(&model, &col, model.q()).unwrap()).unwrap();
            let rel = (rec - &col).amax() / col.amax().max(1.0);
            assert!(rel < 1e-9, "criterion 07: projector identity off by {rel:.3e}");
        }
        let mut prev = 0.0;
        for t in 1..=model.q() {
            let value = crv(&model, t).unwrap();
            assert!((0.0..=1.0).contains(&value) && value >= prev);
            prev = value;
        }
        assert_eq!(crv(&model, model.q()).unwrap(), 1.0);
    }

    // score variance on a full-size model too
    let art = FIXTURE.class(GeometryClass::Rectangle);
    let x = art.ds.design_matrix_for(art.split.train()).unwrap();
    for i in 0..art.model.rank() {
        let m = x.n_samples();
        let scores: Vec<f64> = (0..m)
            .map(|j| project(&art.model, &x.column(j), art.model.rank()).unwrap()[i])
            .collect();
        let mean = scores.iter().sum::<f64>() / m as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let rel = (var - art.model.eigenvalues()[i]).abs() / art.model.eigenvalues()[i];
        assert!(rel < 1e-8, "criterion 07: full-size var(y_{i}) off by {rel:.3e}");
    }

    // rank-2 reconstruction of a full-size rectangle training sample
    let col = x.column(0);
    let rec = reconstruct(&art.model, &project(&art.model, &col, 2).unwrap()).unwrap();
    let rel = (rec - &col).amax() / col.amax();
    assert!(rel < 1e-9, "criterion 07: rank-2 reconstruction off by {rel:.3e}");

    // the rectangle mean geometry stays inside the sampling bound: every x
    // magnitude below 5, corner points near E[a]/2 = 2.5
    let mean_x = art.model.mean();
    let n = BATTERY_N;
    for i in 0..n {
        assert!(mean_x[i].abs() < 5.0, "criterion 07: mean |x| out of bound");
    }
    let corner = mean_x[0].abs();
    assert!(
        (corner - 2.5).abs() < 0.15,
        "criterion 07: mean corner x = {corner}, expected about 2.5"
    );

    // vec round trip, exactly
    let cloud = GeometryClass::Tube
        .generate(&egpc_core::sample_parameters(&GeometryClass::Tube.spec(), 5, 1).unwrap()[0], 200)
        .unwrap();
    assert_eq!(unvectorize(&vectorize(&cloud)).unwrap(), cloud);

    // boundaries: m = 2 and constant data
    let x = DataMatrix::from_columns(&[
        DVector::from_vec(vec![0.0, 1.0, 2.0]),
        DVector::from_vec(vec![1.0, -1.0, 0.0]),
    ])
    .unwrap();
    let model = fit_pca(&x).unwrap();
    assert_eq!(model.q(), 1);
    let c = DVector::from_vec(vec![4.0, 4.0]);
    let constant = DataMatrix::from_columns(&[c.clone(), c.clone(), c]).unwrap();
    let model = fit_pca(&constant).unwrap();
    assert_eq!(model.rank(), 0);
    assert!(crv(&model, 1).is_err());

    println!(
        "criterion 07 (PCA invariant suite): PASS - orthonormality, score variance, projector, CRV, vec round trip, boundaries"
    );
}

#[test]
fn c08_oracle_equivalence_on_small_instances() {
    let mut worst_ev = 0.0f64;
    let mut worst_h = 0.0f64;
    for (l, k, m, seed) in [(12usize, 2usize, 30usize, 81u64), (30, 3, 50, 82), (50, 4, 40, 83)] {
        let (x_raw, p_raw) = random_instance(l, k, m, seed);
        let x = DataMatrix::from_matrix(x_raw).unwrap();
        let p = ParameterMatrix::from_matrix(p_raw).unwrap();
        let model = fit_pca(&x).unwrap();

        // eigenvalues against the explicit covariance + Jacobi oracle
        let (x_mu, _) = center_columns(x.matrix());
        let cov = (&x_mu * x_mu.transpose()) / (m as f64 - 1.0);
        let (oracle, _) = jacobi_eigh(&cov);
        let lambda_1 = model.eigenvalues()[0];
        for i in 0..model.q() {
            let rel = (model.eigenvalues()[i] - oracle[i].max(0.0)).abs() / lambda_1;
            assert!(
                rel <= 1e-9,
                "criterion 08: eigenvalue {i} deviates by {rel:.3e} (l={l}, m={m})"
            );
            worst_ev = worst_ev.max(rel);
        }

        // truncated H against the dense pseudoinverse formula
        let map = fit_parameter_map(&model, &x, &p, model.q()).unwrap();
        let (p_mu, _) = center_columns(p.matrix());
        let gram = &x_mu * x_mu.transpose();
        let h_dense = &p_mu * x_mu.transpose() * pinv_psd(&gram) * model.eigenvectors();
        let dev = (map.h() - &h_dense).amax() / h_dense.amax().max(1.0);
        assert!(dev <= 1e-9, "criterion 08: H deviates from the dense oracle by {dev:.3e}");
        worst_h = worst_h.max(dev);
    }
    println!(
        "criterion 08 (factorization vs dense oracles): PASS - worst eigenvalue dev {worst_ev:.1e}, worst H dev {worst_h:.1e}"
    );
}

#[test]
fn c09_second_set_surrogates() {
    let mut lines = Vec::new();
    for class in [GeometryClass::FanBlade, GeometryClass::Tube] {
        let art = FIXTURE.class(class);
        let k = art.ds.spec().k();
        let t99 = art.t[2];
        assert_ne!(t99, k, "criterion 09: {} has t0.99 == k", class.name());
        for preset in [RPreset::ParamCount, RPreset::T95, RPreset::Fixed(200)] {
            let entry = art.report.preset(preset);
            assert!(
                entry.is_some(),
                "criterion 09: {} lacks preset {}",
                class.name(),
                preset.label()
            );
            let entry = entry.unwrap();
            assert!(entry.summary.mean_abs().iter().all(|e| e.is_finite()));
        }
        lines.push(format!("{} t0.99 = {t99} vs k = {k}", class.name()));
    }
    println!(
        "criterion 09 (surrogate classes, qualitative): PASS - {}; all three presets reported",
        lines.join("; ")
    );
}

#[test]
fn c10_pipeline_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> std::path::PathBuf {
        let out_dir = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_egpc"))
            .args([
                "pipeline",
                "--seed",
                "11",
                "--m",
                "300",
                "--n",
                "60",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "criterion 10: pipeline failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let a = run("first");
    let b = run("second");

    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    let mut names_b: Vec<String> = std::fs::read_dir(&b)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names_b.sort();
    assert_eq!(names, names_b, "criterion 10: artifact sets differ");
    for name in &names {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        let bytes_b = std::fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "criterion 10: {name} differs between runs");
    }
    println!(
        "criterion 10 (pipeline reproducibility): PASS - {} artifacts byte-identical across two runs",
        names.len()
    );
}
