use num_complex::Complex64;

/// A value together with a rigorous absolute error radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certified<T> {
    pub value: T,
    pub radius: f64,
}

pub type CertifiedComplex = Certified<Complex64>;
pub type CertifiedReal = Certified<f64>;

impl<T> Certified<T> {
    pub fn new(value: T, radius: f64) -> Self {
        Self { value, radius }
    }
}

impl Certified<Complex64> {
    pub fn abs(&self) -> Certified<f64> {
        Certified::new(self.value.norm(), self.radius)
    }

    /// |z|² with radius 2|z|r + r².
    pub fn norm_sqr(&self) -> Certified<f64> {
        let a = self.value.norm();
        Certified::new(a * a, 2.0 * a * self.radius + self.radius * self.radius)
    }
}

impl Certified<f64> {
    pub fn lower(&self) -> f64 {
        self.value - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.value + self.radius
    }
}
