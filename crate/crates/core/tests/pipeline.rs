use lbspec::eigen::{dense_generalized_eig, smallest_eigenpairs, EigenOptions};
use lbspec::geom::{parse_off, parse_voxgrid, write_off, write_voxgrid};
use lbspec::partgen::{gen_voxel_part, CorrelatedNoise, GeneratedPart, ScenarioSpec};
use lbspec::rng::seeded;
use lbspec::spectra::{assemble, compute_spectrum};
use lbspec::{BasisOrder, BoundaryCondition, SpectrumConfig};

#[test]
fn generated_parts_roundtrip_through_files() {
    let GeneratedPart::Mesh(mesh) = ScenarioSpec::barrel(3.0).generate(11).unwrap() else {
        panic!()
    };
    let mut buf = Vec::new();
    write_off(&mesh, &mut buf).unwrap();
    let back = parse_off(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back, mesh);

    let grid = gen_voxel_part(7.0, Some(50), 4).unwrap();
    let mut buf = Vec::new();
    write_voxgrid(&grid, &mut buf).unwrap();
    assert_eq!(parse_voxgrid(std::str::from_utf8(&buf).unwrap()).unwrap(), grid);
}

#[test]
fn sparse_solver_matches_dense_on_an_assembled_part() {
    let GeneratedPart::Mesh(mesh) = ScenarioSpec::open_barrel(1.0)
        .with_size_range(Some(400..=400))
        .generate(2)
        .unwrap()
    else {
        panic!()
    };
    let sys = assemble(&mesh, &SpectrumConfig::new(BasisOrder::Linear, BoundaryCondition::Dirichlet, 1)).unwrap();
    assert!(sys.dim() > 300);
    let opts = EigenOptions { shift: Some(0.0), dense_threshold: 0, ..EigenOptions::default() };
    let sparse = smallest_eigenpairs(&sys.stiffness, &sys.mass, 15, &opts).unwrap();
    let dense = dense_generalized_eig(&sys.stiffness.to_dense(), &sys.mass.to_dense()).unwrap();
    for (a, b) in sparse.eigenvalues.iter().zip(&dense) {
        assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn spectra_of_same_seed_are_bit_identical() {
    let spec = ScenarioSpec::voxel_hole(9.0, Some(100));
    let cfg = SpectrumConfig::new(BasisOrder::Linear, BoundaryCondition::Dirichlet, 15);
    let a = spec.generate(5).unwrap();
    let b = spec.generate(5).unwrap();
    let sa = compute_spectrum(a.as_part(), &cfg).unwrap();
    let sb = compute_spectrum(b.as_part(), &cfg).unwrap();
    assert_eq!(sa, sb);
}

/// Sample covariance of the correlated noise against its target on 20 points.
#[test]
fn correlated_noise_covariance() {
    let mut rng = seeded(17);
    let pts: Vec<[f64; 3]> = (0..20)
        .map(|i| {
            let t = i as f64;
            [t * 0.7, (t * 1.3).sin() * 4.0, (t * 0.4).cos() * 3.0]
        })
        .collect();
    let (s1, s2, r) = (0.04, 0.03, [2.0, 3.0, 1.5]);
    let noise = CorrelatedNoise::new(&pts, s1, s2, r).unwrap();
    let draws = 10_000;
    let n = pts.len();
    let mut sum = vec![vec![0.0; 3 * n]; 3 * n];
    for _ in 0..draws {
        let e = noise.sample(&mut rng);
        let flat: Vec<f64> = (0..3).flat_map(|k| e.iter().map(move |d| d[k])).collect();
        for a in 0..3 * n {
            for b in a..3 * n {
                sum[a][b] += flat[a] * flat[b];
            }
        }
    }
    let target = |a: usize, b: usize| {
        let (ka, i) = (a / n, a % n);
        let (kb, j) = (b / n, b % n);
        if ka != kb {
            0.0
        } else if i == j {
            s1 * s1 + s2 * s2
        } else {
            s1 * s1 * (-(pts[i][ka] - pts[j][ka]).abs() / r[ka]).exp()
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..3 * n {
        for b in a..3 * n {
            let est = sum[a][b] / draws as f64;
            // standard error of a product-moment estimate of a Gaussian covariance
            let se = ((target(a, a) * target(b, b) + target(a, b).powi(2)) / draws as f64).sqrt();
            worst = worst.max((est - target(a, b)).abs() / se);
        }
    }
    assert!(worst < 4.0, "worst deviation {worst} SE");
}
