/// How phase-dependent nonlinearities are sampled inside integrals.
///
/// The same choice must be used by the state solve, the phase-field step and
/// the energy ledger, otherwise the discrete decay identities no longer hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Nonlinear functions are taken at vertices: the Brinkman coefficient
    /// is the linear interpolant of the nodal values `alpha(phi_i)`, and the
    /// double well and the stabilizer use the lumped mass. The cut-off then
    /// decreases every energy term exactly, not only the gradient term.
    #[default]
    Nodal,
    /// Nonlinear functions are evaluated at quadrature points from the P1
    /// interpolant of the phase field.
    Quadrature,
}

impl Coupling {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nodal" => Some(Coupling::Nodal),
            "quadrature" => Some(Coupling::Quadrature),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Nodal => "nodal",
            Coupling::Quadrature => "quadrature",
        }
    }
}
