use nalgebra::DMatrix;
use proptest::prelude::*;
use qgspec::graph::{Edge, GraphFile};
use qgspec::heat_kernel::kernel_matrix;
use qgspec::*;

fn length() -> impl Strategy<Value = f64> {
    0.3f64..3.0
}

/// Profiles that do not depend on the mesh.
fn analytic_profile() -> impl Strategy<Value = EdgePotential> {
    prop_oneof![
        (-5.0f64..5.0).prop_map(EdgePotential::Constant),
        (-3.0f64..3.0, 1u32..5).prop_map(|(amplitude, mode)| EdgePotential::Cosine { amplitude, mode }),
        (-3.0f64..3.0, 0.1f64..0.9, 0.05f64..0.3)
            .prop_map(|(amplitude, center, width)| EdgePotential::Bump { amplitude, center, width }),
    ]
}

fn profile() -> impl Strategy<Value = EdgePotential> {
    prop_oneof![
        3 => analytic_profile(),
        1 => prop::collection::vec(-4.0f64..4.0, 2..12).prop_map(EdgePotential::Sampled),
    ]
}

/// A connected graph: a random tree on `n` vertices plus extra edges,
/// loops included.
fn graph() -> impl Strategy<Value = MetricGraph> {
    (2usize..6)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((any::<prop::sample::Index>(), length()), n - 1),
                prop::collection::vec((0..n, 0..n, length()), 0..3),
            )
        })
        .prop_map(|(n, tree, extra)| {
            let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut edges: Vec<Edge> = tree
                .into_iter()
                .enumerate()
                .map(|(i, (parent, length))| Edge {
                    id: format!("t{i}"),
                    tail: parent.index(i + 1),
                    head: i + 1,
                    length,
                })
                .collect();
            for (j, (a, b, length)) in extra.into_iter().enumerate() {
                edges.push(Edge { id: format!("x{j}"), tail: a, head: b, length });
            }
            MetricGraph::new(vertices, edges).unwrap()
        })
}

fn graph_with<S>(profiles: fn() -> S) -> impl Strategy<Value = (MetricGraph, PotentialSpec)>
where
    S: Strategy<Value = EdgePotential> + 'static,
{
    graph().prop_flat_map(move |g| {
        let m = g.edges().len();
        let entries = prop::collection::vec(prop::option::of(profiles()), m);
        (Just(g.clone()), entries).prop_map(|(g, entries)| {
            let spec = PotentialSpec::new(
                &g,
                entries.into_iter().enumerate().filter_map(|(e, p)| p.map(|p| (e, p))),
            )
            .unwrap();
            (g, spec)
        })
    })
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn graph_text_round_trips((g, v) in graph_with(profile)) {
        let file = GraphFile { graph: g, potential: v };
        let text = file.to_string();
        let parsed = GraphFile::parse(&text).unwrap();
        prop_assert_eq!(parsed, file);
    }

    #[test]
    fn potential_is_bounded_by_its_sup_norm(
        (g, v) in graph_with(profile),
        picks in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..=1.0), 20),
    ) {
        for (e, frac) in picks {
            let edge = e.index(g.edges().len());
            let p = PointOnGraph::new(&g, edge, frac * g.edge(edge).length).unwrap();
            prop_assert!(evaluate_potential(&v, &p).unwrap().abs() <= v.sup_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn volume_is_sum_of_lengths(lengths in prop::collection::vec(length(), 1..8)) {
        let g = MetricGraph::star(&lengths).unwrap();
        let sum: f64 = lengths.iter().sum();
        prop_assert!((total_volume(&g) - sum).abs() <= 1e-12 * sum);
        let op = assemble_h0(&g, 0.1).unwrap();
        let weights: f64 = op.weights().iter().sum();
        prop_assert!((weights - sum).abs() <= 1e-12 * sum);
    }

    #[test]
    fn constant_shift_moves_every_eigenvalue(
        (g, v) in graph_with(analytic_profile),
        delta in -3.0f64..3.0,
    ) {
        let op = assemble_h(&g, &v, 0.1).unwrap();
        let values = vec![1.0; op.dim()];
        let base = eigenvalues(&op).unwrap();
        let shifted = eigenvalues(&op.with_added_potential(&values, delta)).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            prop_assert!((b - a - delta).abs() <= 1e-10 * op.norm().max(1.0));
        }
    }

    #[test]
    fn ground_state_is_bounded_by_potential_range((g, v) in graph_with(analytic_profile)) {
        let op = assemble_h(&g, &v, 0.1).unwrap();
        let mu = eigenvalues(&op).unwrap();
        let nodal = op.potential();
        let lo = nodal.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nodal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-10 * op.norm().max(1.0);
        prop_assert!(mu[0] >= lo - tol && mu[0] <= hi + tol);
        let lambda = eigenvalues(&assemble_h0(&g, 0.1).unwrap()).unwrap();
        for (l, m) in lambda.iter().zip(&mu) {
            prop_assert!(*m >= l + lo - tol && *m <= l + hi + tol);
        }
    }

    #[test]
    fn kernel_matrix_is_symmetric_and_nonnegative(g in graph(), t in 0.05f64..2.0) {
        let sd = eigendecompose(&assemble_h0(&g, 0.1).unwrap()).unwrap();
        let k = kernel_matrix(&sd, t).unwrap();
        let scale = k.amax();
        prop_assert!((&k - k.transpose()).amax() <= 1e-12 * scale);
        prop_assert!(k.min() >= -1e-10 * scale);
        // the kernel conserves heat: Σ_j K(x_i, x_j) w_j = 1
        let w = sd.weights();
        for i in 0..k.nrows() {
            let mass: f64 = (0..k.ncols()).map(|j| k[(i, j)] * w[j]).sum();
            prop_assert!((mass - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn eigensolver_invariants(a in (1usize..24).prop_flat_map(symmetric)) {
        let n = a.nrows();
        let norm = a.norm().max(1.0);
        let (values, vectors) = symmetric_eigen(&a, true).unwrap();
        let q = vectors.unwrap();
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((q.transpose() * &q - DMatrix::identity(n, n)).amax() <= 1e-10);
        for (k, l) in values.iter().enumerate() {
            let r = &a * q.column(k) - q.column(k) * *l;
            prop_assert!(r.norm() <= 1e-10 * norm);
        }
        for k in 0..n {
            prop_assert!(q.column(k).sum() >= 0.0);
        }
        let (only, none) = symmetric_eigen(&a, false).unwrap();
        prop_assert!(none.is_none());
        for (x, y) in only.iter().zip(&values) {
            prop_assert!((x - y).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn combinatorial_trace_identity_holds(
        n in 2usize..20,
        seed_weights in prop::collection::vec(0.0f64..2.0, 400),
        potential in prop::collection::vec(-5.0f64..5.0, 20),
    ) {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let x = if j == i + 1 { 0.5 + seed_weights[i * 20 + j] } else { seed_weights[i * 20 + j] * 0.3 };
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
        let g = CombinatorialGraph::new(w, potential[..n].to_vec()).unwrap();
        prop_assert!(combinatorial_trace_identity(&g).unwrap().passed());
    }
}
