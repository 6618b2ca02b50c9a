//! The combinatorial data of one horospherical manifold, in a₁*
//! coordinates: the moment polytope Δ⁺, the shift κ and the
//! Duistermaat–Heckman density.

use crate::dh_integral::{dh_barycenter, dh_volume, DHDensity};
use crate::error::{Error, Result};
use crate::frame::A1Frame;
use crate::polytope::{delta_from_moment, moment_polytope, validate_reflective, Polytope, ReflectivityReport};
use crate::rational::{self, QVector, Rational};
use crate::root_system::{ParabolicDatum, RootDatum};

/// Root data the problem was derived from, when there is any.
#[derive(Debug, Clone)]
pub struct RootData {
    pub rd: RootDatum,
    pub pd: ParabolicDatum,
    pub frame: A1Frame,
}

#[derive(Debug, Clone)]
pub struct HorosphericalProblem {
    moment: Polytope,
    kappa: QVector,
    density: DHDensity,
    root_data: Option<RootData>,
}

impl HorosphericalProblem {
    /// Checks that κ is interior to Δ⁺ and the density is nonnegative there.
    pub fn new(moment: Polytope, kappa: QVector, density: DHDensity) -> Result<Self> {
        let r = moment.dim();
        if kappa.len() != r {
            return Err(Error::Dimension {
                expected: r,
                got: kappa.len(),
            });
        }
        if density.dim() != r {
            return Err(Error::Dimension {
                expected: r,
                got: density.dim(),
            });
        }
        if !moment.contains_in_interior(&kappa) {
            return Err(Error::validation(
                "kappa interiority",
                format!(
                    "kappa = {:?} is not an interior point of the moment polytope",
                    kappa.iter().map(rational::format_rational).collect::<Vec<_>>()
                ),
            ));
        }
        density.check_nonnegative(&moment)?;
        Ok(HorosphericalProblem {
            moment,
            kappa,
            density,
            root_data: None,
        })
    }

    /// κ = 0 and the Lebesgue density.
    pub fn toric(moment: Polytope) -> Result<Self> {
        let r = moment.dim();
        Self::new(moment, rational::zeros(r), DHDensity::lebesgue(r))
    }

    /// Δ⁺ given directly; κ and the density forms come from the root data.
    pub fn from_root_data(rd: RootDatum, pd: ParabolicDatum, frame: A1Frame, moment: Polytope) -> Result<Self> {
        if moment.dim() != frame.rank() {
            return Err(Error::Dimension {
                expected: frame.rank(),
                got: moment.dim(),
            });
        }
        let kappa = frame.to_a1_star(&pd.kappa).ok_or_else(|| {
            Error::validation("kappa in a1*", "kappa does not lie in the span of the a1 basis")
        })?;
        let forms = pd.phi_q_plus.iter().map(|beta| frame.form(beta)).collect();
        let density = DHDensity::new(frame.rank(), forms)?;
        let mut hp = Self::new(moment, kappa, density)?;
        hp.root_data = Some(RootData { rd, pd, frame });
        Ok(hp)
    }

    /// Δ⁺ = κ + Q*. The reflectivity report is returned alongside; its
    /// failures are not errors here.
    pub fn from_reflective(
        rd: RootDatum,
        pd: ParabolicDatum,
        frame: A1Frame,
        q: &Polytope,
    ) -> Result<(Self, ReflectivityReport)> {
        let report = validate_reflective(q, &rd, &pd, &frame)?;
        let kappa = frame.to_a1_star(&pd.kappa).ok_or_else(|| {
            Error::validation("kappa in a1*", "kappa does not lie in the span of the a1 basis")
        })?;
        let moment = moment_polytope(q, &kappa)?;
        Ok((Self::from_root_data(rd, pd, frame, moment)?, report))
    }

    pub fn rank(&self) -> usize {
        self.moment.dim()
    }

    pub fn moment(&self) -> &Polytope {
        &self.moment
    }

    pub fn kappa(&self) -> &[Rational] {
        &self.kappa
    }

    pub fn density(&self) -> &DHDensity {
        &self.density
    }

    pub fn root_data(&self) -> Option<&RootData> {
        self.root_data.as_ref()
    }

    /// `Δ⁺ − κ`, the polytope the soliton weight and the R(M) ray live on.
    pub fn shifted(&self) -> Polytope {
        self.moment.translate(&rational::neg(&self.kappa))
    }

    /// `Δ = κ − Δ⁺`.
    pub fn delta(&self) -> Polytope {
        delta_from_moment(&self.moment, &self.kappa).expect("kappa interiority is a construction invariant")
    }

    /// `2Δ`, the gradient image of admissible potentials.
    pub fn two_delta(&self) -> Polytope {
        self.delta()
            .dilate(&Rational::from_integer(2.into()))
            .expect("dilation by 2 is invertible")
    }

    pub fn volume(&self) -> Result<Rational> {
        dh_volume(&self.moment, &self.density)
    }

    pub fn barycenter(&self) -> Result<QVector> {
        dh_barycenter(&self.moment, &self.density)
    }

    pub fn kappa_f64(&self) -> Vec<f64> {
        rational::to_f64_vec(&self.kappa)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::rational::{frac, int, qvec};
    use crate::root_system::{build_root_system, parabolic_data, Family, RootSystemSpec};

    fn interval(lo: Rational, hi: Rational) -> Polytope {
        Polytope::from_vertices(vec![vec![lo], vec![hi]]).unwrap()
    }

    #[test]
    fn toric_interval() {
        let hp = HorosphericalProblem::toric(interval(int(-1), int(2))).unwrap();
        assert_eq!(hp.volume().unwrap(), int(3));
        assert_eq!(hp.barycenter().unwrap(), vec![frac(1, 2)]);
        assert_eq!(hp.two_delta().vertices(), &[qvec(&[-4]), qvec(&[2])]);
    }

    #[test]
    fn kappa_outside_is_rejected() {
        let err = HorosphericalProblem::new(interval(int(0), int(3)), qvec(&[0]), DHDensity::lebesgue(1)).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn a1_from_reflective_input() {
        let rd = build_root_system(&RootSystemSpec::simple(Family::A, 1)).unwrap();
        let pd = parabolic_data(&rd, &BTreeSet::new()).unwrap();
        let frame = A1Frame::new(&rd, vec![qvec(&[1, -1])], None).unwrap();
        let q = interval(frac(-1, 2), int(1));
        let (hp, _) = HorosphericalProblem::from_reflective(rd, pd, frame, &q).unwrap();
        assert_eq!(hp.kappa(), &[int(1)]);
        assert_eq!(hp.moment().vertices(), &[qvec(&[0]), qvec(&[3])]);
        assert_eq!(hp.density().forms(), &[qvec(&[2])]);
        assert_eq!(hp.delta().vertices(), &[qvec(&[-2]), qvec(&[1])]);
    }
}
