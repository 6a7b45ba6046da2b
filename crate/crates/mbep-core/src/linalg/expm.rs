//! Matrix exponential by scaling and squaring with diagonal Padé kernels
//! (orders 3/5/7/9/13 selected on the 1-norm, Higham-style thresholds).

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use num::complex::Complex64 as C64;

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120., 60., 12., 1.],
        5 => &[30240., 15120., 3360., 420., 30., 1.],
        7 => &[17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.],
        9 => &[
            17643225600.,
            8821612800.,
            2075673600.,
            302702400.,
            30270240.,
            2162160.,
            110880.,
            3960.,
            90.,
            1.,
        ],
        13 => &[
            64764752532480000.,
            32382376266240000.,
            7771770303897600.,
            1187353796428800.,
            129060195264000.,
            10559470521600.,
            670442572800.,
            33522128640.,
            1323241920.,
            40840800.,
            960960.,
            16380.,
            182.,
            1.,
        ],
        _ => unreachable!(),
    }
}

/// `e^{m t}`. Backward-error target 1e-13 relative in the Frobenius norm for
/// the scales in scope; extreme `||m t||` is reported, never saturated.
pub fn matrix_exp(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = m.require_square()?;
    let a = m.scale(&C64::new(t, 0.0));
    if !a.is_finite() {
        return Err(Error::Overflow("non-finite input to matrix exponential".into()));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let eta = a.one_norm();
    if !eta.is_finite() || eta > 1e12 {
        return Err(Error::Overflow(format!("||m t||_1 = {eta:.3e} exceeds the supported range")));
    }

    let (order, squarings) = {
        let small = THETA.iter().find(|&&(_, theta)| eta <= theta);
        match small {
            Some(&(m, _)) => (m, 0u32),
            None => {
                let theta13 = THETA[4].1;
                let s = (eta / theta13).log2().ceil().max(0.0) as u32;
                (13, s)
            }
        }
    };
    let a = a.scale(&C64::new(0.5f64.powi(squarings as i32), 0.0));

    let b = pade_coeffs(order);
    let id = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let (u, v) = if order < 13 {
        // Even/odd coefficient split over increasing powers of A^2.
        let mut even = id.scale(&C64::new(b[0], 0.0));
        let mut odd = id.scale(&C64::new(b[1], 0.0));
        let mut pw = a2.clone();
        let mut k = 2;
        while k + 1 <= order {
            even = even.add(&pw.scale(&C64::new(b[k], 0.0)));
            odd = odd.add(&pw.scale(&C64::new(b[k + 1], 0.0)));
            if k + 2 <= order {
                pw = pw.matmul(&a2);
            }
            k += 2;
        }
        (a.matmul(&odd), even)
    } else {
        let a4 = a2.matmul(&a2);
        let a6 = a2.matmul(&a4);
        let u_hi = a6
            .scale(&C64::new(b[13], 0.0))
            .add(&a4.scale(&C64::new(b[11], 0.0)))
            .add(&a2.scale(&C64::new(b[9], 0.0)));
        let u_lo = a6
            .scale(&C64::new(b[7], 0.0))
            .add(&a4.scale(&C64::new(b[5], 0.0)))
            .add(&a2.scale(&C64::new(b[3], 0.0)))
            .add(&id.scale(&C64::new(b[1], 0.0)));
        let u = a.matmul(&a6.matmul(&u_hi).add(&u_lo));
        let v_hi = a6
            .scale(&C64::new(b[12], 0.0))
            .add(&a4.scale(&C64::new(b[10], 0.0)))
            .add(&a2.scale(&C64::new(b[8], 0.0)));
        let v = a6
            .matmul(&v_hi)
            .add(&a6.scale(&C64::new(b[6], 0.0)))
            .add(&a4.scale(&C64::new(b[4], 0.0)))
            .add(&a2.scale(&C64::new(b[2], 0.0)))
            .add(&id.scale(&C64::new(b[0], 0.0)));
        (u, v)
    };

    let mut x = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..squarings {
        x = x.matmul(&x);
    }
    if !x.is_finite() {
        return Err(Error::Overflow("matrix exponential overflowed f64".into()));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use num::complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMatrix::zeros(4, 4);
        let e = matrix_exp(&z, 3.7).unwrap();
        assert_eq!(e, CMatrix::identity(4));
    }

    #[test]
    fn jordan_block_exponential_is_toeplitz() {
        // e^{J_N(lambda) t} = e^{lambda t} * [t^k / k! on the k-th superdiagonal]
        let lam = c(-0.3, 0.8);
        let n = 5;
        let mut j = CMatrix::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = lam;
            if i + 1 < n {
                j[(i, i + 1)] = c(1.0, 0.0);
            }
        }
        for &t in &[0.3, 1.7, 6.0] {
            let e = matrix_exp(&j, t).unwrap();
            let scale = (lam * t).exp();
            let mut fact = 1.0;
            for k in 0..n {
                if k > 0 {
                    fact *= k as f64;
                }
                let want = scale * t.powi(k as i32) / fact;
                for i in 0..n - k {
                    assert!(
                        (e[(i, i + k)] - want).norm() < 1e-12 * scale.norm().max(1.0),
                        "t={t} k={k}"
                    );
                }
                for i in k + 1..n {
                    assert!(e[(i, i - k - 1)].norm() < 1e-13 * scale.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn semigroup_property() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 6;
        // Random contraction: shift the spectrum left so norms stay tame.
        let mut m = CMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
        });
        for i in 0..n {
            m[(i, i)] -= c(1.5, 0.0);
        }
        let (t1, t2) = (0.8, 2.3);
        let lhs = matrix_exp(&m, t1).unwrap().matmul(&matrix_exp(&m, t2).unwrap());
        let rhs = matrix_exp(&m, t1 + t2).unwrap();
        assert!(lhs.sub(&rhs).frobenius_norm() < 1e-10);
    }

    #[test]
    fn stable_spectrum_keeps_bounded_norm() {
        // Spectrum with nonpositive real parts: no spurious growth on [0, 100].
        let m = CMatrix::from_rows(vec![
            vec![c(-0.2, 1.0), c(0.5, 0.0), c(0.0, 0.3)],
            vec![c(0.0, 0.0), c(-0.01, -2.0), c(0.4, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.7)],
        ]);
        let bound = 40.0; // generous transient allowance for this fixture
        let mut t = 0.0;
        while t <= 100.0 {
            let e = matrix_exp(&m, t).unwrap();
            assert!(e.frobenius_norm() < bound, "t={t}: {}", e.frobenius_norm());
            t += 5.0;
        }
    }

    #[test]
    fn extreme_norm_is_reported() {
        let m = CMatrix::from_real_rows(vec![vec![1e9, 0.0], vec![0.0, 1e9]]);
        assert!(matrix_exp(&m, 1e9).is_err());
    }
}
