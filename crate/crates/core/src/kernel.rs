//! Dot-product kernels behind the brute-force similarity scan.
//!
//! The reference store keeps record payloads as contiguous f32 rows; queries
//! stay f64. Every kernel widens f32 lanes to f64 before multiplying, so each
//! product is exact and results differ from a plain sequential loop only by
//! summation order (a few ULPs at dimension 1024 — well inside the 1e-9
//! tolerances used by the retrieval tests). The vector paths exist because a
//! 4.5k-record scan has to fit a ~1 ms per-query budget.

/// Dot product of an f64 query row against an f32 record row.
///
/// Panics in debug builds if lengths differ; callers validate dimensions.
pub(crate) fn dot_f64_f32(query: &[f64], record: &[f32]) -> f64 {
    debug_assert_eq!(query.len(), record.len());
    #[cfg(target_arch = "x86_64")]
    {
        if is_x86_feature_detected!("avx512f") {
            // SAFETY: feature checked at runtime.
            return unsafe { dot_f64_f32_avx512(query, record) };
        }
        if is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
            // SAFETY: features checked at runtime.
            return unsafe { dot_f64_f32_avx2(query, record) };
        }
    }
    dot_f64_f32_scalar(query, record)
}

/// Dot product of two f64 slices (norms, pairwise cosine in the tracker).
pub(crate) fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for (ca, cb) in a.chunks_exact(4).zip(b.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..a.len() {
        sum += a[j] * b[j];
    }
    sum
}

fn dot_f64_f32_scalar(query: &[f64], record: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = query.len() / 4;
    for (cq, cr) in query.chunks_exact(4).zip(record.chunks_exact(4)) {
        acc[0] += cq[0] * cr[0] as f64;
        acc[1] += cq[1] * cr[1] as f64;
        acc[2] += cq[2] * cr[2] as f64;
        acc[3] += cq[3] * cr[3] as f64;
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..query.len() {
        sum += query[j] * record[j] as f64;
    }
    sum
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2", enable = "fma")]
unsafe fn dot_f64_f32_avx2(query: &[f64], record: &[f32]) -> f64 {
    use std::arch::x86_64::*;
    let n = query.len();
    let qp = query.as_ptr();
    let rp = record.as_ptr();
    let mut acc0 = _mm256_setzero_pd();
    let mut acc1 = _mm256_setzero_pd();
    let mut acc2 = _mm256_setzero_pd();
    let mut acc3 = _mm256_setzero_pd();
    let chunks = n / 16;
    for i in 0..chunks {
        let j = i * 16;
        _mm_prefetch(rp.add(j + 128) as *const i8, _MM_HINT_T0);
        let r0 = _mm256_loadu_ps(rp.add(j));
        let r1 = _mm256_loadu_ps(rp.add(j + 8));
        acc0 = _mm256_fmadd_pd(
            _mm256_loadu_pd(qp.add(j)),
            _mm256_cvtps_pd(_mm256_castps256_ps128(r0)),
            acc0,
        );
        acc1 = _mm256_fmadd_pd(
            _mm256_loadu_pd(qp.add(j + 4)),
            _mm256_cvtps_pd(_mm256_extractf128_ps(r0, 1)),
            acc1,
        );
        acc2 = _mm256_fmadd_pd(
            _mm256_loadu_pd(qp.add(j + 8)),
            _mm256_cvtps_pd(_mm256_castps256_ps128(r1)),
            acc2,
        );
        acc3 = _mm256_fmadd_pd(
            _mm256_loadu_pd(qp.add(j + 12)),
            _mm256_cvtps_pd(_mm256_extractf128_ps(r1, 1)),
            acc3,
        );
    }
    let sum = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    let mut buf = [0.0f64; 4];
    _mm256_storeu_pd(buf.as_mut_ptr(), sum);
    let mut s = (buf[0] + buf[1]) + (buf[2] + buf[3]);
    for j in chunks * 16..n {
        s += query[j] * record[j] as f64;
    }
    s
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn dot_f64_f32_avx512(query: &[f64], record: &[f32]) -> f64 {
    use std::arch::x86_64::*;
    let n = query.len();
    let qp = query.as_ptr();
    let rp = record.as_ptr();
    let mut acc0 = _mm512_setzero_pd();
    let mut acc1 = _mm512_setzero_pd();
    let mut acc2 = _mm512_setzero_pd();
    let mut acc3 = _mm512_setzero_pd();
    let chunks = n / 32;
    for i in 0..chunks {
        let j = i * 32;
        // Record rows stream from memory; prefetching two cache lines ahead
        // hides most of that latency on the scan path.
        _mm_prefetch(rp.add(j + 256) as *const i8, _MM_HINT_T0);
        _mm_prefetch(rp.add(j + 272) as *const i8, _MM_HINT_T0);
        acc0 = _mm512_fmadd_pd(
            _mm512_loadu_pd(qp.add(j)),
            _mm512_cvtps_pd(_mm256_loadu_ps(rp.add(j))),
            acc0,
        );
        acc1 = _mm512_fmadd_pd(
            _mm512_loadu_pd(qp.add(j + 8)),
            _mm512_cvtps_pd(_mm256_loadu_ps(rp.add(j + 8))),
            acc1,
        );
        acc2 = _mm512_fmadd_pd(
            _mm512_loadu_pd(qp.add(j + 16)),
            _mm512_cvtps_pd(_mm256_loadu_ps(rp.add(j + 16))),
            acc2,
        );
        acc3 = _mm512_fmadd_pd(
            _mm512_loadu_pd(qp.add(j + 24)),
            _mm512_cvtps_pd(_mm256_loadu_ps(rp.add(j + 24))),
            acc3,
        );
    }
    let mut s = _mm512_reduce_add_pd(_mm512_add_pd(
        _mm512_add_pd(acc0, acc1),
        _mm512_add_pd(acc2, acc3),
    ));
    for j in chunks * 32..n {
        s += query[j] * record[j] as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(q: &[f64], r: &[f32]) -> f64 {
        q.iter().zip(r).map(|(a, b)| a * *b as f64).sum()
    }

    #[test]
    fn mixed_kernel_matches_naive_across_lengths() {
        for len in [0, 1, 3, 4, 7, 15, 16, 17, 31, 32, 33, 64, 100, 1024, 1031] {
            let q: Vec<f64> = (0..len).map(|i| ((i * 37 + 11) % 101) as f64 * 0.013 - 0.6).collect();
            let r: Vec<f32> = (0..len).map(|i| ((i * 53 + 7) % 89) as f32 * 0.017 - 0.7).collect();
            let got = dot_f64_f32(&q, &r);
            let want = naive(&q, &r);
            let tol = 1e-12 * want.abs().max(1.0);
            assert!(
                (got - want).abs() <= tol,
                "len {len}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn f64_kernel_matches_naive() {
        for len in [0, 1, 2, 3, 4, 5, 63, 64, 65, 1024] {
            let a: Vec<f64> = (0..len).map(|i| (i as f64).sin()).collect();
            let b: Vec<f64> = (0..len).map(|i| (i as f64 * 0.3).cos()).collect();
            let want: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let got = dot_f64(&a, &b);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}
