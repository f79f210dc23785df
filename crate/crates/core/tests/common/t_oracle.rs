//! Two-tailed Student t p-value by Simpson integration of the density.

/// Gamma at a positive half-integer or integer, by the recurrence from
/// Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
fn gamma_half(twice: u32) -> f64 {
    let mut g = if twice % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if twice % 2 == 0 { 2 } else { 1 };
    while k < twice {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

pub fn t_density(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let norm = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    norm * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0)
}

pub fn p_two_tailed(t: f64, df: u32) -> f64 {
    let b = t.abs();
    let n = 200_000;
    let h = b / n as f64;
    let mut sum = t_density(0.0, df) + t_density(b, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * t_density(i as f64 * h, df);
    }
    1.0 - 2.0 * sum * h / 3.0
}
