//! Reduced-scale sanity run of the orbit-vs-limit comparison. Useful as a
//! quick end-to-end check before the full acceptance suite.

use toruslab::convex_body::ConvexBody;
use toruslab::limit_law::{sample_limit_ecdf, LimitLawConfig, LimitVariant};
use toruslab::orbit::{sample_translation_ecdf, TranslationSamplerConfig};
use toruslab::stats::{ks_distance, QuantileSummary};

fn main() {
    let orbit_cfg = TranslationSamplerConfig {
        body: ConvexBody::unit_ball(2).unwrap(),
        r_min: 0.2,
        r_max: 0.4,
        gamma: 0.0,
        n_steps: 10_000,
        samples: 500,
        seed: 1,
    };
    let (orbit, dump) = sample_translation_ecdf(&orbit_cfg).unwrap();
    println!(
        "orbit:  n={} flagged={} quantiles={:?}",
        orbit.len(),
        dump.flagged.len(),
        QuantileSummary::of(&orbit)
    );

    let mut limit_cfg = LimitLawConfig::new(
        ConvexBody::unit_ball(2).unwrap(),
        2,
        LimitVariant::TranslationSym,
    );
    limit_cfg.m_cutoff = 8;
    limit_cfg.p_max = 32;
    limit_cfg.samples = 1000;
    limit_cfg.seed = 2;
    limit_cfg.n_haar = 100_000;
    let (limit, ldump) = sample_limit_ecdf(&limit_cfg).unwrap();
    println!(
        "limit:  n={} resampled={} quantiles={:?}",
        limit.len(),
        ldump.resampled,
        QuantileSummary::of(&limit)
    );
    println!("ks = {:.4}", ks_distance(&orbit, &limit));
}
