use nalgebra::{DMatrix, SymmetricEigen};

use super::{pack_index, pack_scale, Cone};

/// Euclidean projection of `v` onto `cone`, in place.
pub fn project(cone: Cone, v: &mut [f64]) {
    match cone {
        Cone::Zero(_) => v.fill(0.0),
        Cone::Nonneg(_) => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        Cone::Soc(_) => project_soc(v),
        Cone::Psd(d) => project_psd(d, v),
    }
}

/// Projection onto the dual cone (`Zero*` is the whole space; the others are self-dual).
pub(crate) fn project_dual(cone: Cone, v: &mut [f64]) {
    if !matches!(cone, Cone::Zero(_)) {
        project(cone, v);
    }
}

pub(crate) fn dist(cone: Cone, v: &[f64], dual: bool) -> f64 {
    let mut p = v.to_vec();
    if dual {
        project_dual(cone, &mut p);
    } else {
        project(cone, &mut p);
    }
    v.iter()
        .zip(&p)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let norm = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= t {
        return;
    }
    if norm <= -t {
        v.fill(0.0);
        return;
    }
    let a = 0.5 * (t + norm);
    v[0] = a;
    let f = a / norm;
    v[1..].iter_mut().for_each(|x| *x *= f);
}

fn project_psd(d: usize, v: &mut [f64]) {
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            let x = v[pack_index(d, i, j)] / pack_scale(i, j);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let u = &eig.eigenvectors;
    let keep: Vec<usize> = (0..d).filter(|&k| eig.eigenvalues[k] > 0.0).collect();
    for j in 0..d {
        for i in j..d {
            let s: f64 = keep
                .iter()
                .map(|&k| eig.eigenvalues[k] * u[(i, k)] * u[(j, k)])
                .sum();
            v[pack_index(d, i, j)] = s * pack_scale(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{pack, unpack};
    use crate::linalg::{psd_project, SymMatrix};

    #[test]
    fn soc_projection_cases() {
        let mut inside = [2.0, 1.0, 1.0];
        project(Cone::Soc(3), &mut inside);
        assert_eq!(inside, [2.0, 1.0, 1.0]);
        let mut polar = [-3.0, 1.0, 1.0];
        project(Cone::Soc(3), &mut polar);
        assert_eq!(polar, [0.0; 3]);
        let mut out = [0.0, 3.0, 4.0];
        project(Cone::Soc(3), &mut out);
        assert_eq!(out, [2.5, 1.5, 2.0]);
    }

    #[test]
    fn psd_projection_matches_dense_routine() {
        let m =
            SymMatrix::from_rows(&[[1.0, 2.0, 0.0], [2.0, -1.0, 0.5], [0.0, 0.5, 0.3]]).unwrap();
        let mut v = pack(&m);
        project(Cone::Psd(3), &mut v);
        let expect = psd_project(&m).unwrap();
        assert!(unpack(&v, 3).max_abs_diff(&expect) < 1e-12);
        assert!(dist(Cone::Psd(3), &v, false) < 1e-12);
    }

    #[test]
    fn distances() {
        assert_eq!(dist(Cone::Nonneg(2), &[-3.0, 4.0], false), 3.0);
        assert_eq!(dist(Cone::Zero(2), &[-3.0, 4.0], false), 5.0);
        assert_eq!(dist(Cone::Zero(2), &[-3.0, 4.0], true), 0.0);
    }
}
