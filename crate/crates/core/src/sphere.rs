//! Geometry of unit spheres S^{p-1}: distances, projections, the (s, y)
//! coordinate decomposition relative to an axis, orthonormal frames, and the
//! angular product error between small spheres.
//!
//! A *small sphere* C(mu0, nu) is the set of points at geodesic distance
//! arccos(nu) from the axis mu0. Every point x decomposes into the latitude
//! cosine s = mu0'x and a direction y on the equatorial subsphere S^{p-2};
//! the frame fixes which rotation carries mu0 to the first coordinate axis.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const POLE_TOL: f64 = 1e-12;

/// Point on S^{p-1}; the constructor normalizes and rejects degenerate input.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVec {
    coords: DVector<f64>,
}

impl UnitVec {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "unit vector needs dimension >= 2, got {}",
                coords.len()
            )));
        }
        let norm = coords.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidParameter(
                "cannot normalize zero or non-finite vector".into(),
            ));
        }
        Ok(Self { coords: coords / norm })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(coords))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn dot(&self, other: &UnitVec) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.coords.dot(&other.coords))
    }

    pub fn negate(&self) -> UnitVec {
        Self { coords: -self.coords.clone() }
    }

    /// Standard basis vector e_i on S^{p-1}.
    pub fn basis(p: usize, i: usize) -> Self {
        let mut v = DVector::zeros(p);
        v[i] = 1.0;
        Self { coords: v }
    }
}

/// Geodesic distance arccos(u'v) in radians, in [0, pi].
pub fn geodesic_distance(u: &UnitVec, v: &UnitVec) -> Result<f64> {
    Ok(u.dot(v)?.clamp(-1.0, 1.0).acos())
}

/// (I - mu0 mu0') x, the projection onto the orthogonal complement of mu0.
pub fn project_complement(mu0: &UnitVec, x: &DVector<f64>) -> DVector<f64> {
    let s = mu0.coords().dot(x);
    x - mu0.coords() * s
}

/// (s, y) coordinates of a point relative to an axis: s = mu0'x and y the
/// direction of the projection onto the equatorial subsphere, expressed in
/// the canonical frame of the axis.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub s: f64,
    pub y: UnitVec,
}

/// Orthonormal frame with column 1 = mu0 and (when built from a mode
/// direction) column 2 = the unit projection of mu1 onto the complement of
/// mu0. Always orientation-preserving (det = +1), so the horizontal angle
/// conventions agree across frames sharing an axis.
#[derive(Debug, Clone)]
pub struct Frame {
    columns: DMatrix<f64>,
}

impl Frame {
    /// Frame whose second column is the unit projection of `mu1`.
    pub fn new(mu0: &UnitVec, mu1: &UnitVec) -> Result<Self> {
        if mu0.dim() != mu1.dim() {
            return Err(Error::DimensionMismatch { expected: mu0.dim(), got: mu1.dim() });
        }
        let t = project_complement(mu0, mu1.coords());
        let tn = t.norm();
        if tn < 1e-10 {
            return Err(Error::InvalidParameter(
                "mu1 coincides with the axis; the frame direction is undefined".into(),
            ));
        }
        Self::complete(mu0, Some(t / tn))
    }

    /// Canonical frame from the axis alone (deterministic completion).
    pub fn from_axis(mu0: &UnitVec) -> Self {
        Self::complete(mu0, None).expect("completion from an axis cannot fail")
    }

    fn complete(mu0: &UnitVec, second: Option<DVector<f64>>) -> Result<Self> {
        let p = mu0.dim();
        let mut cols: Vec<DVector<f64>> = vec![mu0.coords().clone()];
        if let Some(t) = second {
            cols.push(t);
        }
        // Gram-Schmidt over the standard basis
        for i in 0..p {
            if cols.len() == p {
                break;
            }
            let mut v = DVector::zeros(p);
            v[i] = 1.0;
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
            let n = v.norm();
            if n > 1e-8 {
                cols.push(v / n);
            }
        }
        if cols.len() != p {
            return Err(Error::Numerical("frame completion failed".into()));
        }
        let mut m = DMatrix::zeros(p, p);
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        // enforce det = +1 by flipping the last column if needed
        if m.determinant() < 0.0 {
            let last = p - 1;
            let flipped = -m.column(last);
            m.set_column(last, &flipped);
        }
        Ok(Self { columns: m })
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn axis(&self) -> UnitVec {
        UnitVec { coords: self.columns.column(0).into_owned() }
    }

    /// Decompose x into (s, y); errors at the poles where y is undefined.
    pub fn decompose(&self, x: &UnitVec) -> Result<Canonical> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        let coords = self.columns.tr_mul(x.coords());
        let s = coords[0].clamp(-1.0, 1.0);
        if 1.0 - s.abs() < POLE_TOL {
            return Err(Error::PoleDegeneracy);
        }
        let y = coords.rows(1, self.dim() - 1).into_owned();
        Ok(Canonical { s, y: UnitVec::new(y)? })
    }

    /// x = E (s, sqrt(1-s^2) y); the inverse of `decompose`.
    pub fn recompose(&self, s: f64, y: &UnitVec) -> Result<UnitVec> {
        if s.abs() > 1.0 + UNIT_TOL {
            return Err(Error::InvalidParameter(format!("|s| must be <= 1, got {s}")));
        }
        if y.dim() != self.dim() - 1 {
            return Err(Error::DimensionMismatch { expected: self.dim() - 1, got: y.dim() });
        }
        let s = s.clamp(-1.0, 1.0);
        let r = (1.0 - s * s).max(0.0).sqrt();
        let mut coords = DVector::zeros(self.dim());
        coords[0] = s;
        for i in 1..self.dim() {
            coords[i] = r * y.coords()[i - 1];
        }
        UnitVec::new(&self.columns * coords)
    }
}

/// Decompose relative to the canonical frame of `mu0`.
pub fn decompose(mu0: &UnitVec, x: &UnitVec) -> Result<Canonical> {
    Frame::from_axis(mu0).decompose(x)
}

/// A small sphere C(mu0, nu), the locus at geodesic distance arccos(nu)
/// from mu0.
#[derive(Debug, Clone)]
pub struct SmallSphereSpec {
    pub mu0: UnitVec,
    pub nu: f64,
}

impl SmallSphereSpec {
    pub fn new(mu0: UnitVec, nu: f64) -> Result<Self> {
        if !(nu > -1.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu must lie in (-1, 1), got {nu}"
            )));
        }
        Ok(Self { mu0, nu })
    }

    /// C(mu0, nu) = C(-mu0, -nu); fix the representative so the first
    /// nonzero coordinate of the axis is positive.
    pub fn canonicalize(&self) -> Self {
        for &c in self.mu0.as_slice() {
            if c.abs() > 1e-12 {
                if c < 0.0 {
                    return Self { mu0: self.mu0.negate(), nu: -self.nu };
                }
                break;
            }
        }
        self.clone()
    }
}

/// Angle between two axes in degrees.
pub fn angle_degrees(u: &UnitVec, v: &UnitVec) -> Result<f64> {
    Ok(geodesic_distance(u, v)?.to_degrees())
}

/// Angular product error (degrees) between two small spheres:
/// sqrt(Angle(mu0_hat, mu0)^2 + ((180/pi)(arccos nu_hat - arccos nu))^2).
///
/// The truth is canonicalized by axis sign; the estimate enters through the
/// better of its two (mu0, nu) <-> (-mu0, -nu) representations of the same
/// circle. Both choices coincide away from the coordinate planes, but the
/// sign rule alone is ill-conditioned when the leading axis coordinate sits
/// at noise level.
pub fn angular_product_error(truth: &SmallSphereSpec, est: &SmallSphereSpec) -> Result<f64> {
    angular_product_error_multi(&truth.mu0, &[truth.nu], &est.mu0, &[est.nu])
}

/// Multivariate extension: one shared axis term plus one latitude term per
/// marginal small sphere.
pub fn angular_product_error_multi(
    truth_mu0: &UnitVec,
    truth_nu: &[f64],
    est_mu0: &UnitVec,
    est_nu: &[f64],
) -> Result<f64> {
    if truth_nu.len() != est_nu.len() {
        return Err(Error::DimensionMismatch { expected: truth_nu.len(), got: est_nu.len() });
    }
    let (tm, tn) = canonical_multi(truth_mu0, truth_nu);
    let raw = |em: &UnitVec, en: &[f64]| -> Result<f64> {
        let axis = angle_degrees(&tm, em)?;
        let mut sq = axis * axis;
        for (tv, ev) in tn.iter().zip(en) {
            let lat = (ev.clamp(-1.0, 1.0).acos() - tv.clamp(-1.0, 1.0).acos()).to_degrees();
            sq += lat * lat;
        }
        Ok(sq.sqrt())
    };
    let direct = raw(est_mu0, est_nu)?;
    let flipped_nu: Vec<f64> = est_nu.iter().map(|v| -v).collect();
    let flipped = raw(&est_mu0.negate(), &flipped_nu)?;
    Ok(direct.min(flipped))
}

fn canonical_multi(mu0: &UnitVec, nu: &[f64]) -> (UnitVec, Vec<f64>) {
    for &c in mu0.as_slice() {
        if c.abs() > 1e-12 {
            if c < 0.0 {
                return (mu0.negate(), nu.iter().map(|v| -v).collect());
            }
            break;
        }
    }
    (mu0.clone(), nu.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use crate::rng::RngStream;

    fn random_unit(rng: &mut RngStream, p: usize) -> UnitVec {
        loop {
            let v = DVector::from_fn(p, |_, _| rng.normal());
            if v.norm() > 1e-6 {
                return UnitVec::new(v).unwrap();
            }
        }
    }

    #[test]
    fn unitvec_normalizes() {
        let u = UnitVec::from_slice(&[3.0, 4.0, 0.0]).unwrap();
        assert_abs_diff_eq!(u.coords().norm(), 1.0, epsilon = 1e-12);
        assert!(UnitVec::from_slice(&[0.0, 0.0, 0.0]).is_err());
        assert!(UnitVec::from_slice(&[1.0]).is_err());
    }

    #[test]
    fn geodesic_distance_examples() {
        let u = UnitVec::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let v = UnitVec::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(geodesic_distance(&u, &u).unwrap(), 0.0);
        assert_abs_diff_eq!(
            geodesic_distance(&u, &u.negate()).unwrap(),
            std::f64::consts::PI
        );
        assert_abs_diff_eq!(
            geodesic_distance(&u, &v).unwrap(),
            std::f64::consts::FRAC_PI_2
        );
        let w = UnitVec::from_slice(&[0.0, 1.0]).unwrap();
        assert!(geodesic_distance(&u, &w).is_err());
    }

    #[test]
    fn geodesic_distance_is_metric_on_random_triples() {
        let mut rng = RngStream::new(11);
        for _ in 0..100 {
            let (a, b, c) = (
                random_unit(&mut rng, 3),
                random_unit(&mut rng, 3),
                random_unit(&mut rng, 3),
            );
            let dab = geodesic_distance(&a, &b).unwrap();
            let dba = geodesic_distance(&b, &a).unwrap();
            assert_abs_diff_eq!(dab, dba, epsilon = 1e-14);
            let dac = geodesic_distance(&a, &c).unwrap();
            let dcb = geodesic_distance(&c, &b).unwrap();
            assert!(dab <= dac + dcb + 1e-9);
        }
    }

    #[test]
    fn projection_examples() {
        let mu0 = UnitVec::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let out = project_complement(&mu0, mu0.coords());
        assert!(out.norm() < 1e-14);
        let x = DVector::from_row_slice(&[0.0, 0.7, 0.2]);
        assert_relative_eq!(project_complement(&mu0, &x), x);
        let x = DVector::from_row_slice(&[0.6, 0.8, 0.0]);
        let got = project_complement(&mu0, &x);
        assert_abs_diff_eq!(got[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(got[1], 0.8);
        assert_abs_diff_eq!(got[2], 0.0);
        assert!(mu0.coords().dot(&got).abs() < 1e-12);
    }

    #[test]
    fn frame_is_orthogonal_and_oriented() {
        let mut rng = RngStream::new(3);
        for p in [3usize, 4, 7] {
            for _ in 0..20 {
                let mu0 = random_unit(&mut rng, p);
                let mu1 = random_unit(&mut rng, p);
                if mu0.dot(&mu1).unwrap().abs() > 0.999 {
                    continue;
                }
                let f = Frame::new(&mu0, &mu1).unwrap();
                let m = f.matrix();
                let gram = m.tr_mul(m);
                for i in 0..p {
                    for j in 0..p {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert_abs_diff_eq!(gram[(i, j)], expect, epsilon = 1e-10);
                    }
                }
                assert!(m.determinant() > 0.0);
                // column 2 is the unit projection of mu1
                let t = project_complement(&mu0, mu1.coords());
                let t = &t / t.norm();
                assert!((m.column(1) - t).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn decompose_in_plane_point() {
        let mu0 = UnitVec::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let x = UnitVec::from_slice(&[0.5, 0.75f64.sqrt(), 0.0]).unwrap();
        let c = decompose(&mu0, &x).unwrap();
        assert_abs_diff_eq!(c.s, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c.y.as_slice()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.y.as_slice()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn decompose_recompose_round_trip() {
        let mut rng = RngStream::new(17);
        for p in [3usize, 4] {
            let mu0 = random_unit(&mut rng, p);
            let frame = Frame::from_axis(&mu0);
            for _ in 0..1000 {
                let x = random_unit(&mut rng, p);
                if 1.0 - mu0.dot(&x).unwrap().abs() < 1e-8 {
                    continue;
                }
                let c = frame.decompose(&x).unwrap();
                let back = frame.recompose(c.s, &c.y).unwrap();
                assert!(
                    (back.coords() - x.coords()).norm() < 1e-10,
                    "round trip failed at p={p}"
                );
                assert_abs_diff_eq!(mu0.dot(&back).unwrap(), c.s, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn recompose_pole_and_validation() {
        let mu0 = UnitVec::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let frame = Frame::from_axis(&mu0);
        let y = UnitVec::from_slice(&[1.0, 0.0]).unwrap();
        let x = frame.recompose(1.0, &y).unwrap();
        assert!((x.coords() - mu0.coords()).norm() < 1e-12);
        assert!(frame.recompose(1.5, &y).is_err());
        // pole degeneracy on the way back
        assert!(matches!(frame.decompose(&mu0), Err(Error::PoleDegeneracy)));
    }

    #[test]
    fn recompose_lands_on_circle_mode_meridian() {
        let mu0 = UnitVec::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let mu1 = UnitVec::from_slice(&[0.6, 0.0, 0.8]).unwrap();
        let frame = Frame::new(&mu0, &mu1).unwrap();
        let nu = 0.8;
        let y = UnitVec::from_slice(&[1.0, 0.0]).unwrap();
        let x = frame.recompose(nu, &y).unwrap();
        // on C(mu0, nu), in the meridian plane of mu1
        assert_abs_diff_eq!(mu0.dot(&x).unwrap(), nu, epsilon = 1e-12);
        let t = project_complement(&mu0, mu1.coords());
        let t = &t / t.norm();
        assert_abs_diff_eq!(t.dot(x.coords()), (1.0 - nu * nu).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn angular_error_cases() {
        let mu0 = UnitVec::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let spec = SmallSphereSpec::new(mu0.clone(), 0.5).unwrap();
        assert_abs_diff_eq!(angular_product_error(&spec, &spec).unwrap(), 0.0);

        // axis rotated by 3 degrees, same nu
        let th = 3.0f64.to_radians();
        let rot = UnitVec::from_slice(&[th.sin(), 0.0, th.cos()]).unwrap();
        let est = SmallSphereSpec::new(rot, 0.5).unwrap();
        assert_abs_diff_eq!(angular_product_error(&spec, &est).unwrap(), 3.0, epsilon = 1e-10);

        // (mu0, nu) vs (-mu0, -nu) is the same circle
        let flipped = SmallSphereSpec::new(mu0.negate(), -0.5).unwrap();
        assert_abs_diff_eq!(angular_product_error(&spec, &flipped).unwrap(), 0.0, epsilon = 1e-12);

        // symmetry
        let other = SmallSphereSpec::new(
            UnitVec::from_slice(&[0.1, -0.2, 0.9]).unwrap(),
            0.3,
        )
        .unwrap();
        assert_abs_diff_eq!(
            angular_product_error(&spec, &other).unwrap(),
            angular_product_error(&other, &spec).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn small_sphere_spec_validation() {
        let mu0 = UnitVec::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        assert!(SmallSphereSpec::new(mu0.clone(), 1.0).is_err());
        let canon = SmallSphereSpec::new(mu0.negate(), -0.4).unwrap().canonicalize();
        assert!(canon.mu0.as_slice()[1] > 0.0);
        assert_abs_diff_eq!(canon.nu, 0.4);
    }
}
