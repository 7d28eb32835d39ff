//! Brute-force quartiles: materialize the sorted list and walk it to the
//! interpolation position with exact rational arithmetic on integers.

/// Quantile at probability num/den using position num·(n−1)/den.
fn quantile(values: &[u32], num: u64, den: u64) -> f64 {
    let mut sorted = values.to_vec();
    // insertion sort, deliberately not the library sort
    for i in 1..sorted.len() {
        let mut j = i;
        while j > 0 && sorted[j - 1] > sorted[j] {
            sorted.swap(j - 1, j);
            j -= 1;
        }
    }
    let n = sorted.len() as u64;
    let scaled = num * (n - 1);
    let lo = (scaled / den) as usize;
    let rem = scaled % den;
    if rem == 0 {
        return sorted[lo] as f64;
    }
    let a = sorted[lo] as i64;
    let b = sorted[lo + 1] as i64;
    // a + (b − a)·rem/den, formed as one exact fraction before dividing
    ((a * den as i64 + (b - a) * rem as i64) as f64) / den as f64
}

pub fn tau(values: &[u32]) -> f64 {
    let q1 = quantile(values, 1, 4);
    let q3 = quantile(values, 3, 4);
    q1 - 1.5 * (q3 - q1)
}
