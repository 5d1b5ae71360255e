//! Angular error of DOA estimates and RMSE aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
#[allow(unused_imports)] // float math comes from here only without std
use num_traits::Float;

use crate::geometry::{angle_between, norm, MicArray};
use crate::{Error, Result, Vec3};

/// Which subspace an array can resolve, selecting the DOA projection used
/// before comparing angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeometryClass {
    /// Microphones on the x-axis: only the angle from the yz-plane is observable.
    Linear = 1,
    /// Microphones in the xy-plane: the sign of z is ambiguous.
    Planar = 2,
    Spatial = 3,
}

impl GeometryClass {
    pub fn from_index(beta: u8) -> Option<Self> {
        match beta {
            1 => Some(Self::Linear),
            2 => Some(Self::Planar),
            3 => Some(Self::Spatial),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Dimension of the affine span of the microphone positions.
    pub fn of(array: &MicArray) -> Self {
        let c = array.centroid();
        let mut scatter = Matrix3::<f64>::zeros();
        for p in array.positions() {
            let d = nalgebra::Vector3::new(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
            scatter += d * d.transpose();
        }
        let eig = SymmetricEigen::new(scatter);
        let largest = eig.eigenvalues.max();
        let rank = eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > 1e-10 * largest)
            .count();
        match rank {
            0 | 1 => Self::Linear,
            2 => Self::Planar,
            _ => Self::Spatial,
        }
    }
}

impl fmt::Display for GeometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "1-D",
            Self::Planar => "2-D",
            Self::Spatial => "3-D",
        })
    }
}

/// `g(x) = atan2(x_x, sqrt(x_y² + x_z²))`, in `[-π/2, π/2]`.
pub fn azimuth(x: &Vec3) -> f64 {
    x[0].atan2((x[1] * x[1] + x[2] * x[2]).sqrt())
}

/// Maps a unit DOA onto the subspace the geometry class can resolve.
pub fn project_doa(x: &Vec3, class: GeometryClass) -> Result<Vec3> {
    if x.iter().any(|c| !c.is_finite()) || (norm(x) - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter("DOA must be a unit vector"));
    }
    Ok(match class {
        GeometryClass::Linear => {
            let g = azimuth(x);
            [g.cos(), g.sin(), 0.0]
        }
        GeometryClass::Planar => [x[0], x[1], x[2].abs()],
        GeometryClass::Spatial => *x,
    })
}

/// Per true source, the smallest projected angle to any estimate. With no
/// estimates every source scores `π`.
pub fn frame_error<'a>(
    estimates: impl IntoIterator<Item = &'a Vec3>,
    truths: &[Vec3],
    class: GeometryClass,
) -> Result<Vec<f64>> {
    let projected: Vec<Vec3> = estimates
        .into_iter()
        .map(|d| project_doa(d, class))
        .collect::<Result<_>>()?;
    truths
        .iter()
        .map(|t| {
            let t = project_doa(t, class)?;
            Ok(projected
                .iter()
                .map(|d| angle_between(d, &t))
                .fold(PI, f64::min))
        })
        .collect()
}

/// `φ` for `L` frames of `T` sources, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    num_sources: usize,
    phi: Vec<f64>,
    pub class: GeometryClass,
}

impl ErrorRecord {
    pub fn new(num_sources: usize, class: GeometryClass) -> Result<Self> {
        if num_sources == 0 {
            return Err(Error::InvalidParameter("at least one source is required"));
        }
        Ok(Self {
            num_sources,
            phi: Vec::new(),
            class,
        })
    }

    pub fn push_frame(&mut self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.num_sources {
            return Err(Error::DimensionMismatch {
                what: "sources per frame",
                expected: self.num_sources,
                got: phi.len(),
            });
        }
        if phi.iter().any(|&p| !(0.0..=PI).contains(&p)) {
            return Err(Error::InvalidParameter("angular error outside [0, pi]"));
        }
        self.phi.extend_from_slice(phi);
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.phi.len() / self.num_sources
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn frame(&self, l: usize) -> &[f64] {
        &self.phi[l * self.num_sources..(l + 1) * self.num_sources]
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    pub fn rmse(&self) -> Result<f64> {
        rmse(&self.phi)
    }
}

/// `sqrt(mean(φ²))` over all frames and sources.
pub fn rmse(phi: &[f64]) -> Result<f64> {
    if phi.is_empty() {
        return Err(Error::InvalidParameter("RMSE of an empty record"));
    }
    Ok((phi.iter().map(|p| p * p).sum::<f64>() / phi.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Srp,
    Svd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Srp => "srp",
            Self::Svd => "svd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// RMSE of one simulated scenario for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRmse {
    pub geometry: String,
    pub sources: usize,
    pub method: Method,
    pub rmse: f64,
}

/// One `(geometry, source count)` row of the campaign table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub geometry: String,
    pub sources: usize,
    pub srp_mean: Option<f64>,
    pub svd_mean: Option<f64>,
    pub simulations: usize,
}

impl SummaryRow {
    /// `mean(SRP) - mean(SVD)`: positive when SVD-PHAT does better.
    pub fn improvement(&self) -> Option<f64> {
        Some(self.srp_mean? - self.svd_mean?)
    }
}

/// Mean RMSE per `(geometry, sources, method)` cell, rows ordered by geometry
/// name then source count.
pub fn campaign_summary(records: &[SimulationRmse]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(String, usize), [(f64, usize); 2]> = BTreeMap::new();
    for r in records {
        let cell = cells
            .entry((r.geometry.clone(), r.sources))
            .or_insert([(0.0, 0); 2]);
        let slot = &mut cell[r.method as usize];
        slot.0 += r.rmse;
        slot.1 += 1;
    }
    cells
        .into_iter()
        .map(|((geometry, sources), [srp, svd])| {
            let mean = |(sum, n): (f64, usize)| (n > 0).then(|| sum / n as f64);
            SummaryRow {
                geometry,
                sources,
                srp_mean: mean(srp),
                svd_mean: mean(svd),
                simulations: srp.1.max(svd.1),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn linear_projection_cases() {
        let p = project_doa(&[0.0, 1.0, 0.0], GeometryClass::Linear).unwrap();
        assert_eq!(p, [1.0, 0.0, 0.0]);
        let p = project_doa(&[1.0, 0.0, 0.0], GeometryClass::Linear).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-16 && p[1] == 1.0 && p[2] == 0.0);
        assert!((azimuth(&[1.0, 0.0, 0.0]) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn planar_projection_flips_z() {
        assert_eq!(
            project_doa(&[0.6, 0.0, -0.8], GeometryClass::Planar).unwrap(),
            [0.6, 0.0, 0.8]
        );
    }

    #[test]
    fn non_unit_input_rejected() {
        assert!(project_doa(&[1.0, 1.0, 0.0], GeometryClass::Spatial).is_err());
    }

    #[test]
    fn frame_error_cases() {
        let truth = [[1.0, 0.0, 0.0]];
        let same = [[1.0, 0.0, 0.0]];
        assert_eq!(
            frame_error(&same, &truth, GeometryClass::Spatial).unwrap(),
            vec![0.0]
        );

        // same g value, different elevation: indistinguishable for a linear array
        let x: Vec3 = [0.6, 0.8, 0.0];
        let rotated: Vec3 = [0.6, 0.0, -0.8];
        let phi = frame_error(&[rotated], &[x], GeometryClass::Linear).unwrap();
        assert!(phi[0] < 1e-7);

        let near = [0.1f64.cos(), 0.1f64.sin(), 0.0];
        let far = [0.5f64.cos(), 0.5f64.sin(), 0.0];
        let phi = frame_error(&[far, near], &truth, GeometryClass::Spatial).unwrap();
        assert!((phi[0] - 0.1).abs() < 1e-12);

        let none: [Vec3; 0] = [];
        assert_eq!(
            frame_error(&none, &truth, GeometryClass::Spatial).unwrap(),
            vec![PI]
        );
    }

    #[test]
    fn clamped_arccos_survives_rounding() {
        let a = [0.6, 0.8, 0.0];
        // dot product of a with itself rounds slightly above 1
        let b = [0.6000000000000001, 0.8, 0.0];
        let phi = frame_error(&[b], &[a], GeometryClass::Spatial).unwrap();
        assert!(phi[0].is_finite() && phi[0] < 1e-7);
        let opposite = frame_error(
            &[[-1.0, 0.0, 0.0]],
            &[[1.0, 0.0, 0.0]],
            GeometryClass::Spatial,
        )
        .unwrap();
        assert_eq!(opposite, vec![PI]);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((rmse(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
        assert!((rmse(&[0.3, 0.4]).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn error_record_layout() {
        let mut record = ErrorRecord::new(2, GeometryClass::Planar).unwrap();
        record.push_frame(&[0.1, 0.2]).unwrap();
        record.push_frame(&[0.3, 0.4]).unwrap();
        assert_eq!(record.num_frames(), 2);
        assert_eq!(record.frame(1), &[0.3, 0.4]);
        assert!(record.push_frame(&[0.1]).is_err());
        assert!(record.push_frame(&[0.1, 4.0]).is_err());
    }

    #[test]
    fn geometry_classes_of_presets() {
        assert_eq!(
            GeometryClass::of(&MicArray::linear7()),
            GeometryClass::Linear
        );
        assert_eq!(
            GeometryClass::of(&MicArray::planar7()),
            GeometryClass::Planar
        );
        assert_eq!(
            GeometryClass::of(&MicArray::spatial7()),
            GeometryClass::Spatial
        );
    }

    #[test]
    fn summary_means_and_deltas() {
        let rec = |method, rmse| SimulationRmse {
            geometry: "3-D".to_string(),
            sources: 1,
            method,
            rmse,
        };
        let rows = campaign_summary(&[
            rec(Method::Srp, 0.1),
            rec(Method::Srp, 0.3),
            rec(Method::Svd, 0.1),
            rec(Method::Svd, 0.3),
        ]);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].srp_mean.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(rows[0].improvement(), Some(0.0));
        assert_eq!(rows[0].simulations, 2);
    }
}
