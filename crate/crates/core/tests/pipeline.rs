use std::sync::OnceLock;

use incdist::datasets::gdp_table;
use incdist::demography::{AgePyramid, PyramidShape, Pyramids, DEFAULT_AGES};
use incdist::empirical::{BinnedPid, Units};
use incdist::inequality::{gini_trapezoid, lorenz_from_bins, OpenBinMode};
use incdist::synthesis::{
    attach_pareto_tail, portion_above, simulate_year, to_binned, ScaleFactor, SyntheticPopulation,
    TailMode,
};
use incdist::trajectory::{build_context, CalendarContext, ModelParams};
use proptest::prelude::*;

fn fixture() -> &'static (ModelParams, CalendarContext, SyntheticPopulation) {
    static CELL: OnceLock<(ModelParams, CalendarContext, SyntheticPopulation)> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = ModelParams::preset_1960();
        let ctx = build_context(&params, &gdp_table(), 1995).unwrap();
        let pyramids = Pyramids::stationary(
            AgePyramid::synthetic(1960, PyramidShape::US_LIKE, DEFAULT_AGES).unwrap(),
        );
        let pop = simulate_year(&params, &ctx, &pyramids, 1995).unwrap();
        (params, ctx, pop)
    })
}

#[test]
fn binned_output_round_trips_and_keeps_mass() {
    let (_, _, pop) = fixture();
    let pid = to_binned(pop, 0.005, ScaleFactor::unit(1995)).unwrap();
    let back = BinnedPid::parse_csv(&pid.to_csv(), Units::Dimensionless).unwrap();
    assert_eq!(back, pid);
    let rel = (pid.total_count() / pop.total_weight() - 1.0).abs();
    assert!(rel < 1e-12, "{rel}");
}

#[test]
fn binned_gini_approaches_exact_gini() {
    let (_, _, pop) = fixture();
    let exact = pop.gini().unwrap();
    let pid = to_binned(pop, 0.001, ScaleFactor::unit(1995)).unwrap();
    let lorenz = lorenz_from_bins(
        &pid,
        incdist::empirical::BinIncomeMode::Center,
        OpenBinMode::Drop,
    )
    .unwrap();
    let binned = gini_trapezoid(&lorenz);
    assert!((binned - exact).abs() < 5e-3, "{binned} vs {exact}");
}

#[test]
fn sampled_tail_is_reproducible() {
    let (params, ctx, pop) = fixture();
    let a = attach_pareto_tail(pop, params, ctx, TailMode::Sampled { seed: 7 }).unwrap();
    let b = attach_pareto_tail(pop, params, ctx, TailMode::Sampled { seed: 7 }).unwrap();
    assert_eq!(a.population, b.population);
    let q = attach_pareto_tail(pop, params, ctx, TailMode::Quantile).unwrap();
    assert_eq!(a.tail_entries, q.tail_entries);
    assert!(q.extra_income_ratio > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn portion_above_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (_, _, pop) = fixture();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = portion_above(pop, lo.max(1e-12), 10).unwrap().overall;
        let p_hi = portion_above(pop, hi.max(1e-12), 10).unwrap().overall;
        prop_assert!(p_hi <= p_lo);
        prop_assert!((0.0..=1.0).contains(&p_lo));
    }

    #[test]
    fn gini_is_scale_free(scale in 1.0f64..1e6) {
        let (_, _, pop) = fixture();
        let mut scaled = pop.clone();
        for e in &mut scaled.entries {
            e.income *= scale;
        }
        let d = (scaled.gini().unwrap() - pop.gini().unwrap()).abs();
        prop_assert!(d < 1e-10, "{}", d);
    }

    #[test]
    fn dollar_bins_hold_every_person(width in 500.0f64..20_000.0, dollars in 1e3f64..1e6) {
        let (_, _, pop) = fixture();
        let pid = to_binned(pop, width, ScaleFactor { year: 1995, value: dollars }).unwrap();
        prop_assert_eq!(pid.units(), Units::Dollars);
        let rel = (pid.total_count() / pop.total_weight() - 1.0).abs();
        prop_assert!(rel < 1e-12);
    }
}
