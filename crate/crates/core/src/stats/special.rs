//! Special functions: log-gamma, regularized incomplete gamma and beta, and the
//! normal, Student t, F and studentized-range distribution functions built on them.
//!
//! Tail probabilities are evaluated directly from continued fractions rather than
//! as `1 - cdf`, so p-values far below machine epsilon (1e-50 and smaller) keep
//! their relative accuracy.

#![allow(clippy::excessive_precision)]

use crate::Real;

const MAX_ITER: usize = 500;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::lit(0.5) {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::PI();
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + acc.ln()
}

pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn tiny<T: Real>() -> T {
    T::min_positive_value() / T::epsilon()
}

/// Series for the lower regularized incomplete gamma P(a, x).
fn gamma_p_series<T: Real>(a: T, x: T) -> T {
    let mut ap = a;
    let mut del = T::one() / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * T::epsilon() {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Continued fraction for the upper regularized incomplete gamma Q(a, x).
fn gamma_q_cf<T: Real>(a: T, x: T) -> T {
    let two = T::lit(2.0);
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny::<T>();
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::from_count(i);
        let an = -fi * (fi - a);
        b = b + two;
        d = an * d + b;
        if d.abs() < tiny() {
            d = tiny();
        }
        c = b + an / c;
        if c.abs() < tiny() {
            c = tiny();
        }
        d = T::one() / d;
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lower regularized incomplete gamma P(a, x).
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x < a + T::one() {
        gamma_p_series(a, x)
    } else {
        T::one() - gamma_q_cf(a, x)
    }
}

/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x < a + T::one() {
        T::one() - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Lentz continued fraction used by the incomplete beta function.
fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny() {
        d = tiny();
    }
    d = one / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = T::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny() {
            d = tiny();
        }
        c = one + aa / c;
        if c.abs() < tiny() {
            c = tiny();
        }
        d = one / d;
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny() {
            d = tiny();
        }
        c = one + aa / c;
        if c.abs() < tiny() {
            c = tiny();
        }
        d = one / d;
        let del = d * c;
        h = h * del;
        if (del - one).abs() < T::epsilon() {
            break;
        }
    }
    h
}

fn beta_front<T: Real>(a: T, b: T, x: T) -> T {
    (a * x.ln() + b * (T::one() - x).ln() - ln_beta(a, b)).exp()
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_inc<T: Real>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    if x < (a + T::one()) / (a + b + T::lit(2.0)) {
        beta_front(a, b, x) * beta_cf(a, b, x) / a
    } else {
        T::one() - beta_front(a, b, x) * beta_cf(b, a, T::one() - x) / b
    }
}

/// Complementary error function, accurate in the far tail.
pub fn erfc<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < T::zero() {
        T::lit(2.0) - gamma_q(half, x * x)
    } else {
        gamma_q(half, x * x)
    }
}

/// Standard normal CDF Φ(z).
pub fn normal_cdf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(-z / T::SQRT_2())
}

/// Standard normal survival function 1 - Φ(z).
pub fn normal_sf<T: Real>(z: T) -> T {
    T::lit(0.5) * erfc(z / T::SQRT_2())
}

pub fn normal_pdf<T: Real>(z: T) -> T {
    (-T::lit(0.5) * z * z).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// Standard normal quantile Φ⁻¹(p), Wichura's AS 241 (PPND16).
pub fn normal_quantile<T: Real>(p: T) -> T {
    if p <= T::zero() {
        return T::neg_infinity();
    }
    if p >= T::one() {
        return T::infinity();
    }
    let l = T::lit;
    let q = p - l(0.5);
    if q.abs() <= l(0.425) {
        let r = l(0.180625) - q * q;
        let num = ((((((l(2509.0809287301226727) * r + l(33430.575583588128105)) * r
            + l(67265.770927008700853))
            * r
            + l(45921.953931549871457))
            * r
            + l(13731.693765509461125))
            * r
            + l(1971.5909503065514427))
            * r
            + l(133.14166789178437745))
            * r
            + l(3.387132872796366608);
        let den = ((((((l(5226.495278852545925) * r + l(28729.085735721942674)) * r
            + l(39307.89580009271061))
            * r
            + l(21213.794301586595867))
            * r
            + l(5394.1960214247511077))
            * r
            + l(687.1870074920579083))
            * r
            + l(42.313330701600911252))
            * r
            + T::one();
        return q * num / den;
    }
    let mut r = if q < T::zero() { p } else { T::one() - p };
    r = (-r.ln()).sqrt();
    let val = if r <= l(5.0) {
        let r = r - l(1.6);
        let num = ((((((l(7.7454501427834140764e-4) * r + l(0.0227238449892691845833)) * r
            + l(0.24178072517745061177))
            * r
            + l(1.27045825245236838258))
            * r
            + l(3.64784832476320460504))
            * r
            + l(5.7694972214606914055))
            * r
            + l(4.6303378461565452959))
            * r
            + l(1.42343711074968357734);
        let den = ((((((l(1.05075007164441684324e-9) * r + l(5.475938084995344946e-4)) * r
            + l(0.0151986665636164571966))
            * r
            + l(0.14810397642748007459))
            * r
            + l(0.68976733498510000455))
            * r
            + l(1.6763848301838038494))
            * r
            + l(2.05319162663775882187))
            * r
            + T::one();
        num / den
    } else {
        let r = r - l(5.0);
        let num = ((((((l(2.01033439929228813265e-7) * r + l(2.71155556874348757815e-5)) * r
            + l(0.0012426609473880784386))
            * r
            + l(0.026532189526576123093))
            * r
            + l(0.29656057182850489123))
            * r
            + l(1.7848265399172913358))
            * r
            + l(5.4637849111641143699))
            * r
            + l(6.6579046435011037772);
        let den = ((((((l(2.04426310338993978564e-15) * r + l(1.4215117583164458887e-7)) * r
            + l(1.8463183175100546818e-5))
            * r
            + l(7.868691311456132591e-4))
            * r
            + l(0.0148753612908506148525))
            * r
            + l(0.13692988092273580531))
            * r
            + l(0.59983220655588793769))
            * r
            + T::one();
        num / den
    };
    if q < T::zero() {
        -val
    } else {
        val
    }
}

/// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
pub fn f_sf<T: Real>(f: T, d1: T, d2: T) -> T {
    if f <= T::zero() {
        return T::one();
    }
    let half = T::lit(0.5);
    beta_inc(d2 * half, d1 * half, d2 / (d2 + d1 * f))
}

/// Two-sided p-value P(|T| > |t|) of Student's t with `df` degrees of freedom.
pub fn t_two_sided<T: Real>(t: T, df: T) -> T {
    let half = T::lit(0.5);
    beta_inc(df * half, half, df / (df + t * t))
}

/// Probability that the range of `cc` standard normals is below `w` (R's `wprob`).
fn range_prob<T: Real>(w: T, rr: T, cc: T) -> T {
    const XLEG: [f64; 6] = [
        0.981560634246719250690549090149,
        0.904117256370474856678465866119,
        0.769902674194304687036893833213,
        0.587317954286617447296702418941,
        0.367831498998180193752691536644,
        0.125233408511468915472441369464,
    ];
    const ALEG: [f64; 6] = [
        0.047175336386511827194615961485,
        0.106939325995318430960254718194,
        0.160078328543346226334652529543,
        0.203167426723065921749064455810,
        0.233492536538354808760849898925,
        0.249147045813402785000562436043,
    ];
    let l = T::lit;
    let (c1, c3, bb, wlar) = (l(-30.0), l(60.0), l(8.0), l(3.0));
    let qsqz = w * l(0.5);
    if qsqz >= bb {
        return T::one();
    }
    let mut pr_w = l(2.0) * normal_cdf(qsqz) - T::one();
    pr_w = if pr_w >= T::one() { T::one() } else { pr_w.powf(cc) };
    let wincr = if w > wlar { 2 } else { 3 };
    let mut blb = qsqz;
    let binc = (bb - qsqz) / T::from_count(wincr);
    let mut bub = blb + binc;
    let mut einsum = T::zero();
    let cc1 = cc - T::one();
    for _ in 0..wincr {
        let mut elsum = T::zero();
        let a = l(0.5) * (bub + blb);
        let b = l(0.5) * (bub - blb);
        for jj in 1..=12usize {
            let (j, xx) = if jj > 6 {
                let j = 12 - jj + 1;
                (j, l(XLEG[j - 1]))
            } else {
                (jj, -l(XLEG[jj - 1]))
            };
            let ac = a + b * xx;
            let qexpo = ac * ac;
            if qexpo > c3 {
                break;
            }
            let pplus = normal_cdf(ac);
            let pminus = normal_cdf(ac - w);
            let rinsum = pplus - pminus;
            if rinsum >= (c1 / cc1).exp() {
                elsum = elsum + l(ALEG[j - 1]) * (-(l(0.5) * qexpo)).exp() * rinsum.powf(cc1);
            }
        }
        elsum = elsum * (l(2.0) * b) * cc / (l(2.0) * T::PI()).sqrt();
        einsum = einsum + elsum;
        blb = bub;
        bub = bub + binc;
    }
    pr_w = pr_w + einsum;
    if pr_w <= (c1 / rr).exp() {
        return T::zero();
    }
    pr_w = pr_w.powf(rr);
    pr_w.min(T::one())
}

/// CDF of the studentized range for `groups` means and `df` error degrees of
/// freedom (Copenhaver & Holland, as in R's `ptukey` with one range).
pub fn studentized_range_cdf<T: Real>(q: T, groups: usize, df: T) -> T {
    const XLEGQ: [f64; 8] = [
        0.989400934991649932596154173450,
        0.944575023073232576077988415535,
        0.865631202387831743880467897712,
        0.755404408355003033895101194847,
        0.617876244402643748446671764049,
        0.458016777657227386342419442984,
        0.281603550779258913230460501460,
        0.950125098376374401853193354250e-1,
    ];
    const ALEGQ: [f64; 8] = [
        0.271524594117540948517805724560e-1,
        0.622535239386478928628438369944e-1,
        0.951585116824927848099251076022e-1,
        0.124628971255533872052476282192,
        0.149595988816576732081501730547,
        0.169156519395002538189312079030,
        0.182603415044923588866763667969,
        0.189450610455068496285396723208,
    ];
    let l = T::lit;
    let cc = T::from_count(groups);
    let rr = T::one();
    if q <= T::zero() {
        return T::zero();
    }
    if !q.is_finite() {
        return T::one();
    }
    if df > l(25000.0) {
        return range_prob(q, rr, cc);
    }
    let f2 = df * l(0.5);
    let mut f2lf = f2 * df.ln() - df * T::LN_2() - ln_gamma(f2);
    let f21 = f2 - T::one();
    let ff4 = df * l(0.25);
    let ulen = if df <= l(100.0) {
        l(1.0)
    } else if df <= l(800.0) {
        l(0.5)
    } else if df <= l(5000.0) {
        l(0.25)
    } else {
        l(0.125)
    };
    f2lf = f2lf + ulen.ln();
    let mut ans = T::zero();
    for i in 1..=50usize {
        let mut otsum = T::zero();
        let twa1 = T::from_count(2 * i - 1) * ulen;
        for jj in 1..=16usize {
            let (j, t1, upper) = if jj > 8 {
                let j = jj - 8 - 1;
                let xu = l(XLEGQ[j]) * ulen;
                (j, f2lf + f21 * (twa1 + xu).ln() - (xu + twa1) * ff4, true)
            } else {
                let j = jj - 1;
                let xu = l(XLEGQ[j]) * ulen;
                (j, f2lf + f21 * (twa1 - xu).ln() + (xu - twa1) * ff4, false)
            };
            if t1 >= l(-30.0) {
                let xu = l(XLEGQ[j]) * ulen;
                let qsqz = if upper {
                    q * ((xu + twa1) * l(0.5)).sqrt()
                } else {
                    q * ((twa1 - xu) * l(0.5)).sqrt()
                };
                let wprb = range_prob(qsqz, rr, cc);
                otsum = otsum + wprb * l(ALEGQ[j]) * t1.exp();
            }
        }
        if T::from_count(i) * ulen >= T::one() && otsum <= l(1e-14) {
            break;
        }
        ans = ans + otsum;
    }
    ans.min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from scipy 1.15 (scipy.special / scipy.stats).

    #[test]
    fn ln_gamma_matches_reference() {
        assert_relative_eq!(ln_gamma(0.5_f64), 0.5723649429247, epsilon = 1e-12);
        assert_relative_eq!(ln_gamma(100.5_f64), 361.43554046777757, max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(3.7_f64), 1.428072326665388, epsilon = 1e-12);
        assert_relative_eq!(ln_gamma(1.0_f64), 0.0, epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(0.5_f32), 0.572_364_9, epsilon = 1e-5);
    }

    #[test]
    fn incomplete_beta_matches_reference() {
        assert_relative_eq!(beta_inc(2.5_f64, 3.5, 0.4), 0.4869041915261176, epsilon = 1e-12);
        assert_relative_eq!(beta_inc(0.5_f64, 10.0, 0.01), 0.3420718248432154, epsilon = 1e-12);
        assert_eq!(beta_inc(2.0_f64, 3.0, 0.0), 0.0);
        assert_eq!(beta_inc(2.0_f64, 3.0, 1.0), 1.0);
    }

    #[test]
    fn normal_functions_match_reference() {
        assert_relative_eq!(normal_sf(10.0_f64), 7.61985302416047e-24, max_relative = 1e-10);
        assert_relative_eq!(normal_cdf(-3.5_f64), 0.00023262907903552502, max_relative = 1e-11);
        assert_relative_eq!(normal_cdf(0.0_f64), 0.5, epsilon = 1e-15);
        assert_relative_eq!(normal_quantile(0.975_f64), 1.959963984540054, epsilon = 1e-13);
        assert_relative_eq!(normal_quantile(1e-10_f64), -6.361340902404056, epsilon = 1e-11);
        assert_eq!(normal_quantile(0.5_f64), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert_relative_eq!(normal_cdf(normal_quantile(p)), p, epsilon = 1e-13);
        }
    }

    #[test]
    fn f_and_t_tails_match_reference() {
        assert_relative_eq!(f_sf(40.11_f64, 8.0, 686.0), 1.5535830512026125e-52, max_relative = 1e-9);
        assert_relative_eq!(f_sf(131.84_f64, 8.0, 686.0), 2.9795129099445497e-133, max_relative = 1e-9);
        assert_relative_eq!(f_sf(2.5_f64, 3.0, 20.0), 0.0888437519376892, epsilon = 1e-12);
        assert_relative_eq!(f_sf(54.0_f64, 1.0, 4.0), 0.001826260668259983, epsilon = 1e-12);
        assert_relative_eq!(t_two_sided(2.3_f64, 10.0), 0.044254313284287104, epsilon = 1e-12);
        assert_relative_eq!(t_two_sided(12.0_f64, 686.0), 2.9950671552325823e-30, max_relative = 1e-9);
        assert_relative_eq!(t_two_sided(0.5_f64, 3.0), 0.651447964848151, epsilon = 1e-12);
    }

    #[test]
    fn studentized_range_matches_reference() {
        assert_relative_eq!(studentized_range_cdf(3.5_f64, 3, 12.0), 0.9300045147248164, epsilon = 1e-7);
        assert_relative_eq!(studentized_range_cdf(2.0_f64, 4, 30.0), 0.4993933171468553, epsilon = 1e-7);
        assert_relative_eq!(
            1.0 - studentized_range_cdf(4.2_f64, 9, 686.0),
            0.0748789594726672,
            epsilon = 1e-7
        );
    }

    #[test]
    fn gamma_pq_are_complementary() {
        for &(a, x) in &[(0.5, 0.1), (2.0, 3.0), (10.0, 4.0), (3.3, 12.0)] {
            assert_relative_eq!(gamma_p(a, x) + gamma_q(a, x), 1.0_f64, epsilon = 1e-13);
        }
    }
}
