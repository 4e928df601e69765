use std::collections::HashSet;

use dronesurvey_core::grid::{build_grid, GridSpec};
use dronesurvey_core::planner::{coverage, plan_design, DesignConfig, StopRule, SurveyDesign};
use dronesurvey_core::{PlanarPoint, Polygon, SurveyRegion};
use proptest::prelude::*;

fn check_invariants(design: &SurveyDesign, max_transects: usize) {
    let grid = build_grid(&design.region, &design.grid).unwrap();
    let mut edges = HashSet::new();
    for f in &design.flights {
        assert!(!f.transects.is_empty());
        assert!(f.transects.len() <= max_transects);
        let mut at = f.launch_node;
        for t in &f.transects {
            assert!(edges.insert(t.edge), "edge {} flown twice", t.edge);
            assert_eq!(t.start_node, at, "flight {} breaks its chain", f.id);
            at = t.end_node;
            assert!(design.region.contains_segment(t.start, t.end));
            let (a, b) = grid.edge_segment(t.edge);
            assert!((a == t.start && b == t.end) || (a == t.end && b == t.start));
        }
        let flown: f64 = f.transects.iter().map(|t| t.length_m).sum();
        assert!(flown <= f.total_distance_m + 1e-6);
    }
}

/// The interior grid node at or below `(x, y)`, so launch points always snap.
fn node(x: f64, y: f64) -> PlanarPoint {
    let snap = |v: f64| ((v / 350.0).floor() * 350.0).max(350.0);
    PlanarPoint::new(snap(x), snap(y))
}

fn l_shape(scale: f64) -> SurveyRegion {
    let v = [
        (0.0, 0.0),
        (2.0, 0.0),
        (2.0, 1.0),
        (1.0, 1.0),
        (1.0, 2.0),
        (0.0, 2.0),
    ];
    let poly = Polygon::new(
        v.iter()
            .map(|&(x, y)| PlanarPoint::new(x * scale, y * scale))
            .collect(),
    )
    .unwrap();
    SurveyRegion::from_polygon(poly)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn designs_respect_invariants(
        w in 1200.0f64..3000.0,
        h in 1200.0f64..3000.0,
        seed in any::<u64>(),
        max_transects in 1usize..9,
        target in 0.05f64..0.4,
        lx in 0.1f64..0.9,
        ly in 0.1f64..0.9,
    ) {
        let region = SurveyRegion::rectangle(PlanarPoint::new(0.0, 0.0), w, h).unwrap();
        let spec = GridSpec::for_region(&region, 350.0, PlanarPoint::new(0.0, 0.0)).unwrap();
        let config = DesignConfig { max_transects, stop: StopRule::TargetCoverage(target), ..DesignConfig::default() };
        let launch = [node(lx * w, ly * h), node((1.0 - lx) * w, (1.0 - ly) * h)];
        let d = plan_design(&region, &spec, &launch, seed, &config).unwrap();
        check_invariants(&d, max_transects);
        let again = plan_design(&region, &spec, &launch, seed, &config).unwrap();
        prop_assert_eq!(&d, &again);
        let c = coverage(&d);
        if d.target_reached {
            prop_assert!(c.covered_fraction + 1e-12 >= target);
            let last = d.transects().last().map_or(0.0, |t| t.covered_area_km2);
            prop_assert!(c.covered_km2 - last < target * region.area_km2() + 1e-12);
        }
    }

    #[test]
    fn concave_regions_keep_transects_inside(scale in 1200.0f64..2200.0, seed in any::<u64>()) {
        let region = l_shape(scale);
        let spec = GridSpec::for_region(&region, 350.0, PlanarPoint::new(0.0, 0.0)).unwrap();
        let config = DesignConfig { stop: StopRule::FlightsPerLaunch(3), ..DesignConfig::default() };
        let launch = [node(0.3 * scale, 0.3 * scale), node(1.6 * scale, 0.4 * scale)];
        let d = plan_design(&region, &spec, &launch, seed, &config).unwrap();
        check_invariants(&d, config.max_transects);
    }
}

#[test]
fn different_seeds_give_different_designs() {
    let region = SurveyRegion::rectangle(PlanarPoint::new(0.0, 0.0), 2450.0, 2100.0).unwrap();
    let spec = GridSpec::for_region(&region, 350.0, PlanarPoint::new(0.0, 0.0)).unwrap();
    let launch = [PlanarPoint::new(1000.0, 1000.0)];
    let designs: HashSet<Vec<usize>> = (0..10)
        .map(|s| {
            plan_design(&region, &spec, &launch, s, &DesignConfig::default())
                .unwrap()
                .transects()
                .map(|t| t.edge)
                .collect()
        })
        .collect();
    assert!(designs.len() > 1);
}
