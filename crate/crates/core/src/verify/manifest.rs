//! Every check the suite can emit, with its acceptance criterion, default
//! tolerance and comparison direction.

use std::collections::BTreeMap;

use serde::Serialize;

/// `Upper`: passes when `residual < tolerance`. `Lower`: passes when
/// `residual > tolerance` (positivity and growth certificates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSpec {
    pub name: &'static str,
    pub criterion: u8,
    pub default: f64,
    pub bound: Bound,
}

const fn up(name: &'static str, criterion: u8, default: f64) -> CheckSpec {
    CheckSpec {
        name,
        criterion,
        default,
        bound: Bound::Upper,
    }
}

const fn low(name: &'static str, criterion: u8, default: f64) -> CheckSpec {
    CheckSpec {
        name,
        criterion,
        default,
        bound: Bound::Lower,
    }
}

pub const MANIFEST: &[CheckSpec] = &[
    up("periods_symmetry", 1, 1e-10),
    low("periods_imag_positive", 1, 0.0),
    up("periods_real_part", 1, 1e-9),
    up("periods_normalization", 1, 1e-10),
    up("periods_node_doubling", 1, 1e-9),
    up("half_period_q1", 2, 1e-8),
    up("half_period_q2", 2, 1e-8),
    up("half_period_q3", 2, 1e-8),
    up("half_period_q4", 2, 1e-8),
    up("half_period_q5", 2, 1e-8),
    up("theta_quasi_periodicity", 3, 1e-10),
    up("theta_parity", 3, 1e-10),
    up("theta_brute_force", 3, 1e-11),
    up("torus_reality_t1", 4, 1e-10),
    up("torus_reality_t2", 4, 1e-10),
    up("torus_reality_t3", 4, 1e-10),
    up("torus_reality_t4", 4, 1e-10),
    low("t1_min_theta", 4, 1e-3),
    up("t4_zero", 4, 1e-6),
    up("intersection_p1", 5, 1e-8),
    up("intersection_p2", 5, 1e-8),
    up("intersection_p1_minus_cprime", 5, 1e-8),
    up("intersection_p2_minus_cprime", 5, 1e-8),
    up("k_theta", 6, 1e-9),
    up("k_theta1", 6, 1e-8),
    low("k_theta11", 6, 1e-6),
    up("tangency_gamma1_slope", 6, 1e-6),
    low("tangency_gamma1_curvature", 6, 1e-4),
    up("tangency_gamma2_slope", 6, 1e-6),
    low("tangency_gamma2_curvature", 6, 1e-4),
    up("theta112_identity_literal", 6, 1e-7),
    up("theta112_identity_derived", 6, 1e-7),
    up("gamma_heat_identity", 6, 1e-7),
    up("k_inf_divisor", 6, 1e-7),
    up("fay_residual", 7, 1e-8),
    up("fay_refit", 7, 1e-7),
    up("expansion_gamma", 8, 1e-6),
    up("expansion_beta", 8, 1e-6),
    up("expansion_a2", 8, 1e-6),
    up("expansion_a2_derived", 8, 1e-6),
    up("expansion_b2", 8, 1e-6),
    up("expansion_d2", 8, 1e-6),
    up("eigen_l_row1", 9, 1e-7),
    up("eigen_l_row2", 9, 1e-7),
    up("eigen_l1_row1", 9, 1e-7),
    up("eigen_l1_row2", 9, 1e-7),
    up("d2_coefficient_constant", 9, 1e-9),
    up("f11_vanishes", 9, 1e-7),
    up("commutator_grid", 10, 1e-6),
    up("heat_remainder", 10, 1e-6),
    up("ring_homomorphism", 11, 1e-6),
    up("reconstruction_vs_closed_form", 11, 1e-7),
    up("order_pattern_second", 11, 1e-7),
    up("order_pattern_third", 11, 1e-7),
    up("theorem2_reality", 12, 1e-7),
    up("theorem2_smooth", 12, 2.0),
    up("theorem2_jump", 12, 1e-6),
    up("theorem2_potential_periodicity", 12, 1e-6),
    up("theorem2_translation_commutation", 12, 1e-6),
    up("theorem2_multipliers", 12, 1e-9),
    up("theorem1_reality", 13, 1e-7),
    up("theorem1_periodicity", 13, 1e-7),
    low("theorem1_blowup", 13, 10.0),
];

pub const CRITERIA: [(u8, &str); 13] = [
    (1, "period integrity"),
    (2, "half-period Abel congruences"),
    (3, "theta core"),
    (4, "real tori"),
    (5, "divisor intersection points"),
    (6, "K and tangency"),
    (7, "Fay specialization"),
    (8, "expansion constants"),
    (9, "closed-form operators"),
    (10, "commutativity"),
    (11, "ring embedding"),
    (12, "magnetic regime"),
    (13, "singular regime"),
];

pub fn spec(name: &str) -> Option<&'static CheckSpec> {
    MANIFEST.iter().find(|s| s.name == name)
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    MANIFEST.iter().map(|s| (s.name.to_string(), s.default)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_criteria_covered() {
        let mut names: Vec<&str> = MANIFEST.iter().map(|s| s.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), MANIFEST.len());
        for (id, _) in CRITERIA {
            assert!(MANIFEST.iter().any(|s| s.criterion == id), "criterion {id}");
        }
    }
}
