use super::*;
use crate::domain::{CountBound, DomainSpec};
use crate::enumerate::{enumerate_domain, sample_feasible};
use crate::gp::GpModel;
use crate::kernels::{KernelHyperparams, KernelVariant};
use crate::solve::check_feasible;

fn k2() -> AttributedGraph {
    AttributedGraph::from_edges(2, false, &[(0, 1)], &[vec![1], vec![1]], 1).unwrap()
}

#[test]
fn directed_three_node_row_tally() {
    let m = encode_shortest_paths(&SizeSpec::Fixed(3), true).unwrap();
    let expected = [
        ("node", 3),
        ("dist_self", 3),
        ("edge_ub", 6),
        ("edge_lb", 6),
        ("tri_ub", 27),
        ("tri_lb", 27),
        ("path_self", 9),
        ("path_end", 12),
        ("path_ub", 6),
        ("path_lb", 6),
    ];
    for (family, count) in expected {
        assert_eq!(m.rows_in_family(family), count, "{family}");
    }
    let total: usize = expected.iter().map(|e| e.1).sum();
    assert_eq!(m.rows().len(), total);
}

#[test]
fn undirected_mode_adds_symmetry_rows() {
    let m = encode_shortest_paths(&SizeSpec::Fixed(3), false).unwrap();
    assert_eq!(m.rows_in_family("sym_adj"), 3);
    assert_eq!(m.rows_in_family("sym_dist"), 3);
    assert_eq!(m.rows_in_family("sym_path"), 9);
}

#[test]
fn invalid_sizes_are_rejected() {
    assert!(matches!(
        encode_shortest_paths(&SizeSpec::Bounded { min: 3, max: 2 }, false),
        Err(Error::InvalidSizeBounds { .. })
    ));
    assert!(encode_shortest_paths(&SizeSpec::Fixed(0), false).is_err());
}

#[test]
fn distance_indicator_count() {
    let domain = DomainSpec::fixed(3, true, 1, 1);
    let m = encode_structure(&domain, false).unwrap();
    assert_eq!(m.count_tag(|t| matches!(t, VarTag::DistInd(..))), 36);
}

#[test]
fn complete_graph_count_indicator() {
    let domain = DomainSpec::fixed(3, false, 1, 1);
    let m = encode_structure(&domain, false).unwrap();
    let k3 = AttributedGraph::from_edges(3, false, &[(0, 1), (0, 2), (1, 2)], &[vec![1], vec![1], vec![1]], 1).unwrap();
    let a = full_assignment(&m, &k3).unwrap();
    assert_eq!(a.value_of(&m, VarTag::PathCount(1)), Some(6.0));
    for c in 0..=9 {
        let want = if c == 6 { 1.0 } else { 0.0 };
        assert_eq!(a.value_of(&m, VarTag::PathCountInd(1, c)), Some(want));
    }
    assert!(check_feasible(&m, &a).unwrap());
}

#[test]
fn feature_block_shape() {
    let domain = DomainSpec::fixed(2, false, 1, 2);
    let mut m = encode_shortest_paths(&domain.size, false).unwrap();
    encode_feature_block(&mut m, &domain).unwrap();
    assert_eq!(m.count_tag(|t| matches!(t, VarTag::FeatSum(_))), 2);
    assert_eq!(m.rows_in_family("feat_sum"), 2);
    assert_eq!(m.rows_in_family("feat_onehot"), 2);
    assert_eq!(m.rows_in_family("label_onehot"), 2);
}

#[test]
fn every_enumerated_graph_is_feasible() {
    for domain in [DomainSpec::fixed(4, false, 2, 2), DomainSpec::fixed(3, true, 1, 2), DomainSpec::bounded(1, 3, true, 1, 1)] {
        let m = encode_structure(&domain, true).unwrap();
        for g in enumerate_domain(&domain).unwrap() {
            let a = full_assignment(&m, &g).unwrap();
            assert!(check_feasible(&m, &a).unwrap(), "{g:?}");
        }
    }
}

#[test]
fn flipped_path_flag_is_infeasible() {
    let domain = DomainSpec::fixed(4, false, 1, 1);
    let m = encode_structure(&domain, false).unwrap();
    for g in enumerate_domain(&domain).unwrap() {
        let a = full_assignment(&m, &g).unwrap();
        let id = m.var(VarTag::OnPath(0, 1, 2)).unwrap();
        let mut b = a.clone();
        b.set(id, 1.0 - a.get(id).unwrap());
        assert!(!check_feasible(&m, &b).unwrap());
    }
}

#[test]
fn absent_nodes_carry_no_features() {
    let domain = DomainSpec::bounded(1, 3, false, 2, 3);
    let m = encode_structure(&domain, true).unwrap();
    let a = full_assignment(&m, &k2_labeled()).unwrap();
    for c in 0..3 {
        assert_eq!(a.value_of(&m, VarTag::Feat(2, c)), Some(0.0));
    }
    assert_eq!(a.value_of(&m, VarTag::PathCount(0)), Some(2.0));
    assert!(check_feasible(&m, &a).unwrap());
}

fn k2_labeled() -> AttributedGraph {
    AttributedGraph::from_edges(2, false, &[(0, 1)], &[vec![1, 0, 1], vec![0, 1, 0]], 2).unwrap()
}

#[test]
fn contradictory_caps_are_detected_or_empty() {
    let domain = DomainSpec::fixed(3, false, 1, 1).with_degree_caps(vec![1]);
    assert_eq!(enumerate_domain(&domain).unwrap().count(), 0);
    let m = encode_structure(&domain, false).unwrap();
    assert_eq!(crate::solve::count_feasible(&m, 1 << 20).unwrap(), 0);
    let bad = DomainSpec::fixed(2, false, 2, 2)
        .with_label_counts(vec![CountBound { min: 2, max: 2 }, CountBound { min: 1, max: 2 }]);
    let mut m = encode_shortest_paths(&bad.size, false).unwrap();
    encode_feature_block(&mut m, &bad).unwrap();
    assert!(matches!(apply_domain_constraints(&mut m, &bad), Err(Error::InfeasibleDomainDetected(_))));
}

#[test]
fn no_domain_rows_without_constraints() {
    let domain = DomainSpec::fixed(3, false, 1, 1);
    let mut m = encode_shortest_paths(&domain.size, false).unwrap();
    encode_feature_block(&mut m, &domain).unwrap();
    let before = m.rows().len();
    apply_domain_constraints(&mut m, &domain).unwrap();
    assert_eq!(m.rows().len(), before);
}

fn single_point_model() -> (GpModel, DomainSpec) {
    let gp = GpModel::condition(vec![k2()], vec![0.7], KernelVariant::Ssp, KernelHyperparams::new(1.0, 0.0)).unwrap();
    (gp, DomainSpec::fixed(2, false, 1, 1))
}

#[test]
fn single_point_mean() {
    let (gp, domain) = single_point_model();
    let m = encode_acquisition(&gp, &domain, 1.0).unwrap();
    let a = full_assignment(&m, &k2()).unwrap();
    let (mu, sigma) = posterior_from_assignment(&m, &a).unwrap();
    let expect = 0.7 * (0.5 / (0.5 + 1e-6));
    assert!((mu - expect).abs() <= 1e-12);
    let (gmu, gvar) = crate::gp::posterior(&gp, &k2()).unwrap();
    assert!((mu - gmu).abs() <= 1e-12);
    assert!((sigma - gvar.sqrt()).abs() <= 1e-8);
    assert!(check_feasible(&m, &a).unwrap());
}

#[test]
fn zero_beta_drops_sigma() {
    let (gp, domain) = single_point_model();
    let m = encode_acquisition(&gp, &domain, 0.0).unwrap();
    let sigma = m.var(VarTag::Sigma).unwrap();
    assert!(m.objective().iter().all(|&(v, _)| v != sigma));
    assert_eq!(m.objective().len(), 1);
}

#[test]
fn acquisition_errors() {
    let (gp, _) = single_point_model();
    let prior = GpModel::prior(KernelVariant::Ssp, KernelHyperparams::new(1.0, 1.0)).unwrap();
    let domain = DomainSpec::fixed(2, false, 1, 1);
    assert!(matches!(encode_acquisition(&prior, &domain, 1.0), Err(Error::UnfittedModel)));
    let directed = DomainSpec::fixed(2, true, 1, 1);
    assert!(matches!(encode_acquisition(&gp, &directed, 1.0), Err(Error::IncompatibleDomain(_))));
}

#[test]
fn variance_matrix_is_psd() {
    let domain = DomainSpec::fixed(4, false, 2, 2);
    let points: Vec<_> = (0..6).map(|s| sample_feasible(&domain, s).unwrap()).collect();
    let y = (0..6).map(|i| i as f64).collect();
    let gp = GpModel::condition(points, y, KernelVariant::Esp, KernelHyperparams::with_variance(1.0, 1.0, 2.0)).unwrap();
    let m = encode_acquisition(&gp, &domain, 1.0).unwrap();
    let q = m.quadratic().unwrap().q_matrix();
    assert!((&q - q.transpose()).abs().max() <= 1e-9 * q.abs().max());
    assert!(q.symmetric_eigenvalues().min() >= -1e-9);
}

#[test]
fn export_round_trip() {
    let domain = DomainSpec::fixed(3, false, 2, 2).with_degree_caps(vec![2, 2]);
    let points: Vec<_> = (0..3).map(|s| sample_feasible(&domain, s).unwrap()).collect();
    let gp = GpModel::condition(points, vec![0.1, -0.4, 0.3], KernelVariant::Essp, KernelHyperparams::with_variance(1.0, 0.5, 1.5))
        .unwrap();
    let model = expand_exponentials(&encode_acquisition(&gp, &domain, 1.0).unwrap(), 8).unwrap();
    let names: Vec<String> = model.variables().iter().map(|v| v.name()).collect();
    let objective: HashMap<String, f64> = model.objective().iter().map(|&(v, c)| (names[v].clone(), c)).collect();
    for parsed in [parse_mps(&write_mps(&model)).unwrap(), parse_lp(&write_lp(&model)).unwrap()] {
        assert_eq!(parsed.columns.len(), model.num_vars());
        assert_eq!(parsed.num_constraints(), model.num_constraints());
        assert_eq!(parsed.objective_map(), objective);
        let binaries = parsed.columns.iter().filter(|c| c.kind == VarKind::Binary).count();
        assert_eq!(binaries, model.variables().iter().filter(|v| v.kind == VarKind::Binary).count());
    }
}

#[test]
fn piecewise_exponential_accuracy() {
    let (gp, domain) = single_point_model();
    let gp = GpModel::condition(gp.points().to_vec(), vec![0.7], KernelVariant::Essp, KernelHyperparams::with_variance(1.0, 0.0, 1.0))
        .unwrap();
    let model = expand_exponentials(&encode_acquisition(&gp, &domain, 1.0).unwrap(), 64).unwrap();
    assert_eq!(model.count_tag(|t| matches!(t, VarTag::ExpSegment(0, _))), 63);
    // evaluate the interpolant defined by the segment rows
    let xs: Vec<f64> = (0..64).map(|j| j as f64 / 63.0).collect();
    let worst = (0..=10_000)
        .map(|k| {
            let x = k as f64 / 10_000.0;
            let j = ((x * 63.0).floor() as usize).min(62);
            let (a, b) = (xs[j], xs[j + 1]);
            let y = a.exp() + (b.exp() - a.exp()) * (x - a) / (b - a);
            (y - x.exp()).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
    assert!(expand_exponentials(&model, 1).is_err());
}

#[test]
fn bounded_export_is_rejected() {
    let domain = DomainSpec::bounded(1, 2, false, 1, 1);
    let gp = GpModel::condition(vec![k2()], vec![1.0], KernelVariant::Ssp, KernelHyperparams::new(1.0, 1.0)).unwrap();
    let m = encode_acquisition(&gp, &domain, 1.0).unwrap();
    let dir = std::env::temp_dir().join("graphbo-bounded-export.mps");
    assert!(matches!(export_model(&m, ExportFormat::Mps, 8, &dir), Err(Error::UnsupportedBoundedSizeExport)));
}
