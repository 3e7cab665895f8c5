//! Model parameters and the driven Λ-atom cavity Hamiltonian.
//!
//! Every rate and detuning is expressed in units of the cavity decay rate κ,
//! and ħ = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CompositeOperators, FockTruncation, Level, OperatorMatrix};

/// How a channel rate `γ` weights the Lindblad term of its collapse operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayConvention {
    /// `γ (C ρ C† − ½{C†C, ρ})`: populations decay at rate `γ`.
    #[default]
    Standard,
    /// `γ (2 C ρ C† − C†C ρ − ρ C†C)`: populations decay at rate `2γ`.
    Doubled,
}

impl DecayConvention {
    /// Prefactor handed to [`crate::liouvillian::dissipator`], whose kernel is
    /// the doubled form.
    pub fn dissipator_weight(self) -> f64 {
        match self {
            DecayConvention::Standard => 0.5,
            DecayConvention::Doubled => 1.0,
        }
    }
}

/// Physical parameters of the driven atom–cavity system, in units of κ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atom–cavity coupling.
    pub g: f64,
    /// Probe Rabi frequency on |g⟩↔|e⟩.
    pub eta: f64,
    /// Control Rabi frequency on |m⟩↔|e⟩.
    pub omega_l: f64,
    /// Probe detuning; the cavity and excited-state detunings equal it.
    pub delta_p: f64,
    /// Control detuning.
    pub delta_l: f64,
    pub gamma_ge: f64,
    pub gamma_me: f64,
    pub gamma_gm: f64,
    /// Cavity decay rate. Fixed to 1 by the choice of units.
    #[serde(skip, default = "unit_kappa")]
    pub kappa: f64,
    pub n_max: usize,
    #[serde(default)]
    pub decay_convention: DecayConvention,
}

fn unit_kappa() -> f64 {
    1.0
}

impl Default for SystemParams {
    /// The reference parameter set: g = 10, η = 0.1, Γ_ge = Γ_me = 1.5,
    /// Γ_gm = 5·10⁻⁴, resonant probe and control, no control field.
    fn default() -> Self {
        Self {
            g: 10.0,
            eta: 0.1,
            omega_l: 0.0,
            delta_p: 0.0,
            delta_l: 0.0,
            gamma_ge: 1.5,
            gamma_me: 1.5,
            gamma_gm: 5e-4,
            kappa: 1.0,
            n_max: 8,
            decay_convention: DecayConvention::Standard,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("eta", self.eta),
            ("omega_l", self.omega_l),
            ("delta_p", self.delta_p),
            ("delta_l", self.delta_l),
            ("gamma_ge", self.gamma_ge),
            ("gamma_me", self.gamma_me),
            ("gamma_gm", self.gamma_gm),
            ("kappa", self.kappa),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.g <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "g",
                reason: format!("must be positive, got {}", self.g),
            });
        }
        let non_negative = [
            ("eta", self.eta),
            ("omega_l", self.omega_l),
            ("gamma_ge", self.gamma_ge),
            ("gamma_me", self.gamma_me),
            ("gamma_gm", self.gamma_gm),
            ("kappa", self.kappa),
        ];
        for (field, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        FockTruncation::new(self.n_max)?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<FockTruncation> {
        FockTruncation::new(self.n_max)
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_p
    }

    pub fn delta_e(&self) -> f64 {
        self.delta_p
    }

    pub fn delta_m(&self) -> f64 {
        self.delta_p - self.delta_l
    }

    /// Strong probes need more Fock states than the weak-drive regime.
    pub fn truncation_warning(&self) -> Option<String> {
        if self.eta > 0.5 && self.n_max < 10 {
            Some(format!(
                "probe strength eta = {} with n_max = {} may be under-resolved; consider n_max >= 10",
                self.eta, self.n_max
            ))
        } else {
            None
        }
    }

    pub fn with_omega_l(mut self, omega_l: f64) -> Self {
        self.omega_l = omega_l;
        self
    }

    pub fn with_delta_p(mut self, delta_p: f64) -> Self {
        self.delta_p = delta_p;
        self
    }

    pub fn with_delta_l(mut self, delta_l: f64) -> Self {
        self.delta_l = delta_l;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// `H = Δ_e σ_ee + Δ_m σ_mm + Δ_c a†a + g(a σ_eg + a† σ_ge)
///      + Ω_L(σ_em + σ_me) + η(σ_eg + σ_ge)`
pub fn assemble_hamiltonian(p: &SystemParams) -> Result<OperatorMatrix> {
    p.validate()?;
    let ops = CompositeOperators::new(p.truncation()?);
    Ok(hamiltonian_from_ops(p, &ops))
}

pub(crate) fn hamiltonian_from_ops(p: &SystemParams, ops: &CompositeOperators) -> OperatorMatrix {
    use Level::{E, G, M};
    let a = ops.a();
    let adag = a.adjoint();
    let mut h = ops.sigma(E, E).scale(p.delta_e());
    h = &h + &ops.sigma(M, M).scale(p.delta_m());
    h = &h + &ops.number().scale(p.delta_c());
    let jc = &(a * ops.sigma(E, G)) + &(&adag * ops.sigma(G, E));
    h = &h + &jc.scale(p.g);
    h = &h + &(ops.sigma(E, M) + ops.sigma(M, E)).scale(p.omega_l);
    h = &h + &(ops.sigma(E, G) + ops.sigma(G, E)).scale(p.eta);
    h
}

/// Total excitation number `a†a + σ_ee + σ_mm`.
pub fn excitation_number(ops: &CompositeOperators) -> OperatorMatrix {
    let n = ops.number() + ops.sigma(Level::E, Level::E);
    &n + ops.sigma(Level::M, Level::M)
}

/// Restriction of `h` to the given composite basis indices.
pub fn restrict(h: &OperatorMatrix, indices: &[usize]) -> OperatorMatrix {
    let k = indices.len();
    let mut out = OperatorMatrix::zeros(k);
    for (r, &i) in indices.iter().enumerate() {
        for (c, &j) in indices.iter().enumerate() {
            out.set(r, c, h.get(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_couplings_give_zero_hamiltonian() {
        // g = 0 is outside the validated domain, so go through the raw builder.
        let p = SystemParams {
            g: 0.0,
            eta: 0.0,
            omega_l: 0.0,
            delta_p: 0.0,
            delta_l: 0.0,
            ..SystemParams::default()
        };
        let ops = CompositeOperators::new(p.truncation().unwrap());
        assert_eq!(hamiltonian_from_ops(&p, &ops).max_abs(), 0.0);
    }

    #[test]
    fn vacuum_rabi_splitting() {
        let p = SystemParams {
            g: 10.0,
            eta: 0.0,
            omega_l: 0.0,
            delta_p: 0.0,
            n_max: 1,
            ..SystemParams::default()
        };
        let t = p.truncation().unwrap();
        let h = assemble_hamiltonian(&p).unwrap();
        let one = restrict(&h, &[t.index(Level::G, 1), t.index(Level::E, 0)]);
        let ev = one.hermitian_eigenvalues();
        assert!((ev[0] + 10.0).abs() < 1e-12);
        assert!((ev[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn detuning_conventions() {
        let p = SystemParams::default().with_delta_p(-3.0).with_delta_l(2.0);
        assert_eq!(p.delta_c(), -3.0);
        assert_eq!(p.delta_e(), -3.0);
        assert_eq!(p.delta_m(), -5.0);
    }

    #[test]
    fn validation_names_field() {
        let p = SystemParams {
            gamma_ge: -1.0,
            ..SystemParams::default()
        };
        match p.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "gamma_ge"),
            other => panic!("unexpected {other:?}"),
        }
        let p = SystemParams {
            g: 0.0,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
        assert!(SystemParams::default().with_n_max(0).validate().is_err());
        let p = SystemParams {
            delta_p: f64::NAN,
            ..SystemParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn truncation_guard_warns() {
        assert!(SystemParams::default().truncation_warning().is_none());
        let strong = SystemParams {
            eta: 0.8,
            ..SystemParams::default()
        };
        assert!(strong.truncation_warning().is_some());
        assert!(strong.with_n_max(12).truncation_warning().is_none());
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            0.1..30.0f64,
            0.0..2.0f64,
            0.0..20.0f64,
            -30.0..30.0f64,
            -30.0..30.0f64,
            1usize..5,
        )
            .prop_map(|(g, eta, omega_l, delta_p, delta_l, n_max)| SystemParams {
                g,
                eta,
                omega_l,
                delta_p,
                delta_l,
                n_max,
                ..SystemParams::default()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn hamiltonian_is_hermitian(p in arb_params()) {
            let h = assemble_hamiltonian(&p).unwrap();
            prop_assert!(h.hermiticity_defect() == 0.0);
        }

        #[test]
        fn excitation_number_conserved_without_probe(p in arb_params()) {
            let p = SystemParams { eta: 0.0, ..p };
            let ops = CompositeOperators::new(p.truncation().unwrap());
            let h = hamiltonian_from_ops(&p, &ops);
            let n = excitation_number(&ops);
            prop_assert!(h.commutator(&n).max_abs() < 1e-12);
        }

        #[test]
        fn probe_breaks_excitation_number(p in arb_params()) {
            let p = SystemParams { eta: 0.5, ..p };
            let ops = CompositeOperators::new(p.truncation().unwrap());
            let h = hamiltonian_from_ops(&p, &ops);
            prop_assert!(h.commutator(&excitation_number(&ops)).max_abs() > 0.1);
        }
    }
}
