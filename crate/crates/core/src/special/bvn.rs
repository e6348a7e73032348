//! Bivariate standard normal upper orthant probability, Drezner–Wesolowsky
//! single-integral form with Genz's double-precision refinements.

use super::normal::norm_cdf;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

// (weight, node) pairs on [-1, 1]; only the negative half is listed.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];

const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];

const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

/// Φ̄(x, y, ρ) = P[Z₁ > x, Z₂ > y] for standard normals with correlation ρ.
pub fn binorm_cdf_bar(x: f64, y: f64, rho: f64) -> f64 {
    if rho >= 1.0 {
        return norm_cdf(-x.max(y));
    }
    if rho <= -1.0 {
        return (norm_cdf(-x) - norm_cdf(y)).max(0.0);
    }
    let rule: &[(f64, f64)] = if rho.abs() < 0.3 {
        &GL6
    } else if rho.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let h = x;
    let mut k = y;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if rho.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = rho.asin();
        for &(w, node) in rule {
            for s in [node, -node] {
                let sn = (0.5 * asr * (s + 1.0)).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * TWO_PI) + norm_cdf(-h) * norm_cdf(-k);
    }
    if rho < 0.0 {
        k = -k;
        hk = -hk;
    }
    let a2 = (1.0 - rho) * (1.0 + rho);
    let mut a = a2.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    bvn =
        a * (-0.5 * (bs / a2 + hk)).exp() * (1.0 - c * (bs - a2) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
    if hk > -160.0 {
        let b = bs.sqrt();
        bvn -= (-0.5 * hk).exp() * TWO_PI.sqrt() * norm_cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for &(w, node) in rule {
        for s in [node, -node] {
            let xs = (a * (s + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let e = -0.5 * (bs / xs + hk);
            if e > -100.0 {
                bvn += a
                    * w
                    * e.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    bvn = -bvn / TWO_PI;
    if rho > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        (-bvn + (norm_cdf(-h) - norm_cdf(-k)).max(0.0)).max(0.0)
    }
}
