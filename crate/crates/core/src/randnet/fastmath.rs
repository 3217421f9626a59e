//! Branch-free `exp(−z²)` that the compiler can vectorize.

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
// 2^52 + 2^51: adding it rounds to an integer held in the low mantissa bits
const SHIFTER: f64 = 6_755_399_441_055_744.0;

/// Taylor coefficients `1/k!` for `k = 13..=0`.
const COEFFS: [f64; 14] = [
    1.0 / 6_227_020_800.0,
    1.0 / 479_001_600.0,
    1.0 / 39_916_800.0,
    1.0 / 3_628_800.0,
    1.0 / 362_880.0,
    1.0 / 40_320.0,
    1.0 / 5_040.0,
    1.0 / 720.0,
    1.0 / 120.0,
    1.0 / 24.0,
    1.0 / 6.0,
    0.5,
    1.0,
    1.0,
];

/// `exp(x)` for `x ≤ 0`; returns 0 below −708.
#[inline(always)]
pub fn exp_nonpositive(x: f64) -> f64 {
    let xc = x.max(-708.0);
    let shifted = xc * LOG2E + SHIFTER;
    let nf = shifted - SHIFTER;
    let r = (xc - nf * LN2_HI) - nf * LN2_LO;
    let mut p = COEFFS[0];
    for &c in &COEFFS[1..] {
        p = p * r + c;
    }
    let k = (shifted.to_bits() as i64).wrapping_sub(SHIFTER.to_bits() as i64);
    let scale = f64::from_bits((k.wrapping_add(1023) as u64) << 52);
    let keep = (x >= -708.0) as u8 as f64;
    p * scale * keep
}

/// `exp(−z²)`
#[inline(always)]
pub fn gauss(z: f64) -> f64 {
    exp_nonpositive(-z * z)
}

/// Four-lane AVX2 kernels.
#[cfg(target_arch = "x86_64")]
pub(crate) mod avx2 {
    use std::arch::x86_64::*;

    use super::{COEFFS, LN2_HI, LN2_LO, LOG2E, SHIFTER};

    #[inline]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn gauss4(z: __m256d) -> __m256d {
        let x = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(z, z));
        let floor = _mm256_set1_pd(-708.0);
        let xc = _mm256_max_pd(x, floor);
        let shifter = _mm256_set1_pd(SHIFTER);
        let shifted = _mm256_fmadd_pd(xc, _mm256_set1_pd(LOG2E), shifter);
        let nf = _mm256_sub_pd(shifted, shifter);
        let r = _mm256_fnmadd_pd(nf, _mm256_set1_pd(LN2_HI), xc);
        let r = _mm256_fnmadd_pd(nf, _mm256_set1_pd(LN2_LO), r);
        let mut p = _mm256_set1_pd(COEFFS[0]);
        for &c in &COEFFS[1..] {
            p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c));
        }
        let k = _mm256_sub_epi64(_mm256_castpd_si256(shifted), _mm256_set1_epi64x(SHIFTER.to_bits() as i64));
        let scale = _mm256_castsi256_pd(_mm256_slli_epi64::<52>(_mm256_add_epi64(k, _mm256_set1_epi64x(1023))));
        let keep = _mm256_cmp_pd::<_CMP_GE_OQ>(x, floor);
        _mm256_and_pd(_mm256_mul_pd(p, scale), keep)
    }

    /// `out_j = exp(−(b_j + Σ_k w[k·m + j] x_k)²)` for `j < m`.
    ///
    /// # Safety
    /// The CPU must support AVX2 and FMA.
    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn gauss_layer(wt: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
        let m = b.len();
        assert!(wt.len() >= m * x.len() && out.len() >= m);
        let lanes = m / 4 * 4;
        let mut j = 0;
        while j < lanes {
            let mut z = _mm256_loadu_pd(b.as_ptr().add(j));
            for (k, &xk) in x.iter().enumerate() {
                let w = _mm256_loadu_pd(wt.as_ptr().add(k * m + j));
                z = _mm256_fmadd_pd(w, _mm256_set1_pd(xk), z);
            }
            _mm256_storeu_pd(out.as_mut_ptr().add(j), gauss4(z));
            j += 4;
        }
        for j in lanes..m {
            let mut z = b[j];
            for (k, &xk) in x.iter().enumerate() {
                z = wt[k * m + j].mul_add(xk, z);
            }
            out[j] = super::gauss(z);
        }
    }

    /// # Safety
    /// The CPU must support AVX2 and FMA.
    #[target_feature(enable = "avx2,fma")]
    pub(crate) unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let lanes = n / 8 * 8;
        let mut s0 = _mm256_setzero_pd();
        let mut s1 = _mm256_setzero_pd();
        let mut i = 0;
        while i < lanes {
            s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a.as_ptr().add(i)), _mm256_loadu_pd(b.as_ptr().add(i)), s0);
            s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a.as_ptr().add(i + 4)), _mm256_loadu_pd(b.as_ptr().add(i + 4)), s1);
            i += 8;
        }
        let mut buf = [0.0f64; 4];
        _mm256_storeu_pd(buf.as_mut_ptr(), _mm256_add_pd(s0, s1));
        let mut s = (buf[0] + buf[1]) + (buf[2] + buf[3]);
        for i in lanes..n {
            s = a[i].mul_add(b[i], s);
        }
        s
    }
}

/// Eight-lane AVX-512 kernels.
#[cfg(target_arch = "x86_64")]
pub(crate) mod avx512 {
    use std::arch::x86_64::*;

    use super::{COEFFS, LN2_HI, LN2_LO, LOG2E, SHIFTER};

    #[inline]
    #[target_feature(enable = "avx512f")]
    unsafe fn gauss8(z: __m512d) -> __m512d {
        let x = _mm512_sub_pd(_mm512_setzero_pd(), _mm512_mul_pd(z, z));
        let floor = _mm512_set1_pd(-708.0);
        let xc = _mm512_max_pd(x, floor);
        let shifter = _mm512_set1_pd(SHIFTER);
        let shifted = _mm512_fmadd_pd(xc, _mm512_set1_pd(LOG2E), shifter);
        let nf = _mm512_sub_pd(shifted, shifter);
        let r = _mm512_fnmadd_pd(nf, _mm512_set1_pd(LN2_HI), xc);
        let r = _mm512_fnmadd_pd(nf, _mm512_set1_pd(LN2_LO), r);
        let mut p = _mm512_set1_pd(COEFFS[0]);
        for &c in &COEFFS[1..] {
            p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(c));
        }
        let k = _mm512_sub_epi64(_mm512_castpd_si512(shifted), _mm512_set1_epi64(SHIFTER.to_bits() as i64));
        let scale = _mm512_castsi512_pd(_mm512_slli_epi64::<52>(_mm512_add_epi64(k, _mm512_set1_epi64(1023))));
        let keep = _mm512_cmp_pd_mask::<_CMP_GE_OQ>(x, floor);
        _mm512_maskz_mov_pd(keep, _mm512_mul_pd(p, scale))
    }

    /// Same contract as [`super::avx2::gauss_layer`].
    ///
    /// # Safety
    /// The CPU must support AVX-512F.
    #[target_feature(enable = "avx512f")]
    pub(crate) unsafe fn gauss_layer(wt: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
        let m = b.len();
        assert!(wt.len() >= m * x.len() && out.len() >= m);
        let lanes = m / 8 * 8;
        let mut j = 0;
        while j < lanes {
            let mut z = _mm512_loadu_pd(b.as_ptr().add(j));
            for (k, &xk) in x.iter().enumerate() {
                let w = _mm512_loadu_pd(wt.as_ptr().add(k * m + j));
                z = _mm512_fmadd_pd(w, _mm512_set1_pd(xk), z);
            }
            _mm512_storeu_pd(out.as_mut_ptr().add(j), gauss8(z));
            j += 8;
        }
        for j in lanes..m {
            let mut z = b[j];
            for (k, &xk) in x.iter().enumerate() {
                z = wt[k * m + j].mul_add(xk, z);
            }
            out[j] = super::gauss(z);
        }
    }

    /// # Safety
    /// The CPU must support AVX-512F.
    #[target_feature(enable = "avx512f")]
    pub(crate) unsafe fn dot(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let lanes = n / 8 * 8;
        let mut acc = _mm512_setzero_pd();
        let mut i = 0;
        while i < lanes {
            acc = _mm512_fmadd_pd(_mm512_loadu_pd(a.as_ptr().add(i)), _mm512_loadu_pd(b.as_ptr().add(i)), acc);
            i += 8;
        }
        let mut s = _mm512_reduce_add_pd(acc);
        for i in lanes..n {
            s = a[i].mul_add(b[i], s);
        }
        s
    }
}
