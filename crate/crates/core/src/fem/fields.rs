use std::ops::{Deref, DerefMut};

macro_rules! nodal_field {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn constant(n: usize, value: f64) -> Self {
                Self(vec![value; n])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

nodal_field!(
    /// Phase-field coefficients, one per mesh vertex.
    ScalarFieldP1
);

nodal_field!(
    /// Pressure coefficients, one per mesh vertex.
    ScalarPressureP1
);

nodal_field!(
    /// Velocity coefficients on the quadratic space: all `x` components
    /// (vertex dofs, then edge dofs) followed by all `y` components.
    VectorFieldP2
);

impl ScalarFieldP1 {
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl VectorFieldP2 {
    /// Number of scalar dofs per component.
    pub fn n_scalar(&self) -> usize {
        self.0.len() / 2
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.n_scalar();
        &self.0[c * n..(c + 1) * n]
    }

    pub fn at(&self, dof: usize) -> [f64; 2] {
        let n = self.n_scalar();
        [self.0[dof], self.0[n + dof]]
    }
}
