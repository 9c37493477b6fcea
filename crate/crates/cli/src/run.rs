use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use serde_json::{json, Value};

use featgrind::factors::{factors_exact_capped, factors_mc, FactorReport};
use featgrind::features::{generate_features, load_features, FeatureKind, FeatureLayout};
use featgrind::graph::{generate_graph, parse_fraction, sample_nodes, sparsify, GraphKind, SparsifyMethod, SparsifyVariant};
use featgrind::kmeans::Metric;
use featgrind::pipeline::{
    render_csv, render_text, report, sample_batches, simulate_epoch, simulate_workers,
    CacheConfig, CodecCost, CostModel, MiniBatch, SamplerConfig, SimReport, Variant, Workload,
};
use featgrind::sq::{sq_compression_ratio, SqParams};
use featgrind::vq::{vq_compression_ratio, CodeLayout};
use featgrind::{
    encode_vq, fit_sq, fit_vq, quantize_sq, Codec, CsrGraph, FeatureMatrix, Rows, Scalar, VqCodec,
    VqParams,
};

use crate::args::*;
use crate::meta::{write_json, write_sidecar, write_text, Meta};
use crate::UsageError;

type Result<T> = anyhow::Result<T>;

enum AnyFeatures {
    F32(FeatureMatrix<f32>),
    F64(FeatureMatrix<f64>),
}

macro_rules! with_features {
    ($any:expr, $f:ident => $body:expr) => {
        match $any {
            AnyFeatures::F32($f) => $body,
            AnyFeatures::F64($f) => $body,
        }
    };
}

macro_rules! with_precision {
    ($p:expr, $t:ident => $body:expr) => {
        match $p {
            Precision::F32 => {
                type $t = f32;
                $body
            }
            Precision::F64 => {
                type $t = f64;
                $body
            }
        }
    };
}

/// FMAT1 files load at their stored element width; CSV loads as f32.
fn load_any(path: &Path) -> Result<AnyFeatures> {
    let ctx = || format!("reading features {}", path.display());
    let f = match FeatureLayout::from_path(path) {
        FeatureLayout::Csv => AnyFeatures::F32(load_features(path, FeatureLayout::Csv).with_context(ctx)?),
        FeatureLayout::Fmat1 => {
            let bytes = std::fs::read(path).with_context(ctx)?;
            let bits = bytes.get(12..16).map(|b| u32::from_le_bytes(b.try_into().unwrap()));
            if bits == Some(64) {
                AnyFeatures::F64(FeatureMatrix::from_fmat_bytes(&bytes).with_context(ctx)?)
            } else {
                AnyFeatures::F32(FeatureMatrix::from_fmat_bytes(&bytes).with_context(ctx)?)
            }
        }
    };
    Ok(f)
}

fn load_graph(path: &Path) -> Result<CsrGraph> {
    CsrGraph::load(path).with_context(|| format!("reading graph {}", path.display()))
}

pub fn run(cmd: &Command, seed: u64, meta: &Meta) -> Result<()> {
    match cmd {
        Command::GenGraph(a) => gen_graph(a, seed, meta),
        Command::GenFeatures(a) => gen_features(a, seed, meta),
        Command::Sparsify(a) => sparsify_cmd(a, seed, meta),
        Command::Sq(SqCommand::Fit(a)) => sq_fit(a, meta),
        Command::Sq(SqCommand::Encode(a)) => sq_encode(a, meta),
        Command::Sq(SqCommand::Decode(a)) => decode(a, "sq", meta),
        Command::Vq(VqCommand::Fit(a)) => vq_fit(a, seed, meta),
        Command::Vq(VqCommand::Encode(a)) => vq_encode(a, seed, meta),
        Command::Vq(VqCommand::Decode(a)) => decode(a, "vq", meta),
        Command::Factors(a) => factors(a, seed, meta),
        Command::Simulate(a) => simulate(a, seed, meta),
        Command::Report(a) => report_cmd(a, meta),
    }
}

fn gen_graph(a: &GenGraph, seed: u64, meta: &Meta) -> Result<()> {
    let kind = match a.kind {
        GraphKindArg::Star => GraphKind::Star,
        GraphKindArg::Path => GraphKind::Path,
        GraphKindArg::Complete => GraphKind::Complete,
        GraphKindArg::ErdosRenyi => GraphKind::ErdosRenyi { p: a.p },
        GraphKindArg::PreferentialAttachment => GraphKind::PreferentialAttachment { m: a.m },
    };
    let g = generate_graph(kind, a.n, seed, a.self_loops)?;
    g.save(&a.out)?;
    log::info!("wrote {} nodes, {} edges to {}", g.n(), g.num_edges(), a.out.display());
    write_sidecar(&a.out, meta, json!({ "n": g.n(), "edges": g.num_edges() }))
}

fn gen_features(a: &GenFeatures, seed: u64, meta: &Meta) -> Result<()> {
    let kind = match a.kind {
        FeatureKindArg::Gaussian => FeatureKind::Gaussian { mean: a.mean, std: a.std },
        FeatureKindArg::LogNormal => FeatureKind::LogNormal { mu: a.mu, sigma: a.sigma },
        FeatureKindArg::OneHot => FeatureKind::OneHot {
            classes: a.classes.unwrap_or(a.d),
        },
    };
    with_precision!(a.precision, T => {
        let f = generate_features::<T>(kind, a.n, a.d, seed)?;
        f.save(&a.out)?;
    });
    write_sidecar(&a.out, meta, json!({ "n": a.n, "d": a.d }))
}

fn sparsify_cmd(a: &Sparsify, seed: u64, meta: &Meta) -> Result<()> {
    let keep = parse_fraction(&a.keep).map_err(|e| UsageError(format!("--keep: {e}")))?;
    let variant = match a.method {
        MethodArg::Random => SparsifyVariant::Random,
        MethodArg::Centralized => SparsifyVariant::Centralized,
        MethodArg::Uniform => SparsifyVariant::Uniform,
    };
    let method = SparsifyMethod::new(variant, keep).map_err(|e| UsageError(format!("--keep: {e}")))?;
    let g = load_graph(&a.graph)?;
    let s = sparsify(&g, method, seed)?;
    s.save(&a.out)?;
    write_sidecar(
        &a.out,
        meta,
        json!({ "edges_in": g.num_edges(), "edges_out": s.num_edges(), "keep_fraction": keep.to_string() }),
    )
}

fn sq_fit(a: &SqFit, meta: &Meta) -> Result<()> {
    let params = with_features!(load_any(&a.features)?, f => fit_sq(&f, a.k, a.clip)?);
    write_json(a.out.as_deref(), &json!({ "meta": meta.to_json(), "params": params }))
}

fn read_params(path: &Path) -> Result<SqParams> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text)?;
    let params: SqParams = serde_json::from_value(doc.get("params").cloned().unwrap_or(doc))?;
    params.validate()?;
    Ok(params)
}

fn sq_encode(a: &SqEncode, meta: &Meta) -> Result<()> {
    let (codec, elem_bits) = with_features!(load_any(&a.features)?, f => {
        let p = match (&a.params, a.k) {
            (Some(path), _) => read_params(path)?,
            (None, Some(k)) => fit_sq(&f, k, a.clip)?,
            (None, None) => unreachable!("clap requires --k or --params"),
        };
        (quantize_sq(&f, &p)?, f.elem_bits())
    });
    codec.save(&a.out)?;
    let cr = sq_compression_ratio(&codec, elem_bits);
    write_sidecar(&a.out, meta, json!({ "params": codec.params, "compression_ratio": cr }))
}

fn vq_params(a: &VqFitArgs, seed: u64) -> Result<(VqParams, CodeLayout)> {
    let (Some(width), Some(length)) = (a.width, a.length) else {
        return Err(UsageError("--width and --length are required to fit codebooks".into()).into());
    };
    let metric = match a.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Cosine => Metric::Cosine,
    };
    let mut p = VqParams::new(width, length, metric);
    p.fit_sample_fraction = a.sample;
    p.restarts = a.restarts;
    p.kmeans_max_iters = a.max_iters;
    p.kmeans_tol = a.tol;
    p.seed = seed;
    let layout = match a.layout {
        LayoutArg::Packed => CodeLayout::Packed,
        LayoutArg::Byte => CodeLayout::ByteAligned,
    };
    Ok((p, layout))
}

fn fit_with_layout<T: Scalar>(f: &FeatureMatrix<T>, a: &VqFitArgs, seed: u64) -> Result<VqCodec<T>> {
    let (p, layout) = vq_params(a, seed)?;
    let mut c = fit_vq(f, &p)?;
    c.layout = layout;
    Ok(c)
}

fn vq_summary<T: Scalar>(c: &VqCodec<T>, elem_bits: u32) -> Value {
    json!({
        "width": c.params.width,
        "length": c.params.length,
        "num_parts": c.num_parts(),
        "effective_lengths": c.effective_lengths(),
        "objective": c.objective(),
        "compression_ratio": vq_compression_ratio(c, elem_bits),
    })
}

fn vq_fit(a: &VqFit, seed: u64, meta: &Meta) -> Result<()> {
    let summary = with_features!(load_any(&a.features)?, f => {
        let c = fit_with_layout(&f, &a.fit, seed)?;
        c.save(&a.out)?;
        vq_summary(&c, f.elem_bits())
    });
    write_sidecar(&a.out, meta, summary)
}

fn vq_encode(a: &VqEncode, seed: u64, meta: &Meta) -> Result<()> {
    let summary = with_features!(load_any(&a.features)?, f => {
        let fitted = match &a.codebook {
            Some(path) => VqCodec::load(path)
                .with_context(|| format!("reading codebook {}", path.display()))?,
            None => fit_with_layout(&f, &a.fit, seed)?,
        };
        let c = encode_vq(&f, &fitted)?;
        c.save(&a.out)?;
        vq_summary(&c, f.elem_bits())
    });
    write_sidecar(&a.out, meta, summary)
}

fn decode(a: &Decode, expect: &str, meta: &Meta) -> Result<()> {
    let rows = match &a.rows {
        Some(ids) => Rows::Ids(ids),
        None => Rows::All,
    };
    let (n, d) = with_precision!(a.precision, T => {
        let codec = Codec::<T>::load(&a.codec)
            .with_context(|| format!("reading codec {}", a.codec.display()))?;
        match (&codec, expect) {
            (Codec::Sq(_), "sq") | (Codec::Vq(_), "vq") => {}
            _ => bail!("{} is not a {expect} codec file", a.codec.display()),
        }
        let out = codec.decode(rows)?;
        out.save(&a.out)?;
        (out.n(), out.d())
    });
    write_sidecar(&a.out, meta, json!({ "n": n, "d": d }))
}

fn factors(a: &Factors, seed: u64, meta: &Meta) -> Result<()> {
    let mut g = load_graph(&a.graph)?;
    if !g.has_self_loops() {
        log::info!("adding self-loops before aggregation");
        g = g.with_self_loops();
    }
    let features = a.features.as_deref().map(load_any).transpose()?;
    let run = |f: Option<&AnyFeatures>| -> featgrind::Result<FactorReport> {
        macro_rules! go {
            ($f:expr) => {
                match a.estimator {
                    EstimatorArg::Exact => factors_exact_capped(&g, $f, a.layers, a.exact_cap),
                    EstimatorArg::Mc => factors_mc(&g, $f, a.layers, a.samples, seed),
                }
            };
        }
        match f {
            None => go!(None::<&FeatureMatrix<f32>>),
            Some(AnyFeatures::F32(f)) => go!(Some(f)),
            Some(AnyFeatures::F64(f)) => go!(Some(f)),
        }
    };
    let r = run(features.as_ref())?;
    let mut doc = r.to_json(a.per_node);
    doc["meta"] = meta.to_json();
    if let Some(eps) = a.epsilon {
        doc["suggestion"] = serde_json::to_value(r.suggest_cr(eps, a.bits)?)?;
    }
    write_json(a.out.as_deref(), &doc)
}

fn parse_codec(spec: &str, d: usize, n: usize, file: Option<&Codec<f32>>) -> Result<CodecCost> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| UsageError(format!("--codec {spec}: bad {what} {s:?}")).into())
    };
    let cost = match (parts.as_slice(), file) {
        (["full"], _) => return Err(UsageError("internal: full handled by caller".into()).into()),
        (["sq", k], None) => {
            let k = num(k, "bit width")?;
            if !(1..=8).contains(&k) {
                return Err(UsageError(format!("--codec {spec}: k must be in 1..=8")).into());
            }
            CodecCost::Sq { rows: n, d, k: k as u32 }
        }
        (["vq", w, l], None) => {
            let (w, l) = (num(w, "width")?, num(l, "length")?);
            if w == 0 || l < 2 {
                return Err(UsageError(format!("--codec {spec}: need width >= 1, length >= 2")).into());
            }
            CodecCost::Vq {
                rows: n,
                d,
                num_parts: d.div_ceil(w),
                stored_code_bits: (l as f64).log2().ceil() as u32,
            }
        }
        (["sq"], Some(c @ Codec::Sq(_))) | (["vq"], Some(c @ Codec::Vq(_))) => c.cost(),
        (["sq" | "vq", ..], Some(_)) => {
            return Err(UsageError(format!("--codec {spec} does not match --codec-file")).into())
        }
        _ => return Err(UsageError(format!("--codec {spec}: expected full, sq:K, vq or vq:W:L")).into()),
    };
    if cost.d() != d || cost.rows() != n {
        bail!(
            "codec is {}x{}, graph and features are {n}x{d}",
            cost.rows(),
            cost.d()
        );
    }
    Ok(cost)
}

fn measure_decode(batches: &[MiniBatch], codec: Option<&Codec<f32>>, features: Option<&AnyFeatures>) -> Result<Value> {
    let start = Instant::now();
    let mut rows = 0usize;
    for b in batches {
        let ids: Vec<usize> = b.nodes.iter().map(|&v| v as usize).collect();
        rows += ids.len();
        match (codec, features) {
            (Some(c), _) => drop(c.gather(&ids)?),
            (None, Some(f)) => with_features!(f, f => drop(f.gather(Rows::Ids(&ids))?)),
            (None, None) => bail!("--measure needs --codec-file or --features"),
        }
    }
    Ok(json!({ "decode_wall_s": start.elapsed().as_secs_f64(), "rows": rows }))
}

fn simulate(a: &Simulate, seed: u64, meta: &Meta) -> Result<()> {
    let g = load_graph(&a.graph)?;
    let features = a.features.as_deref().map(load_any).transpose()?;
    let (d, elem_bits) = match (&features, a.d) {
        (Some(f), _) => with_features!(f, f => {
            if f.n() != g.n() {
                bail!("features have {} rows, graph has {} nodes", f.n(), g.n());
            }
            (f.d(), f.elem_bits())
        }),
        (None, Some(d)) => (d, a.elem_bits),
        (None, None) => unreachable!("clap requires --features or --d"),
    };
    let codec_file = a
        .codec_file
        .as_deref()
        .map(|p| Codec::<f32>::load(p).with_context(|| format!("reading codec {}", p.display())))
        .transpose()?;
    let full = CodecCost::full(g.n(), d, elem_bits);
    let codec = if a.codec == "full" {
        full
    } else {
        parse_codec(&a.codec, d, g.n(), codec_file.as_ref())?
    };

    if !(a.train_fraction > 0.0 && a.train_fraction <= 1.0) {
        return Err(UsageError(format!("--train-fraction {} outside (0, 1]", a.train_fraction)).into());
    }
    let train = sample_nodes(g.n(), ((a.train_fraction * g.n() as f64).ceil() as usize).max(1), seed);
    let sampler = SamplerConfig {
        fanouts: a.fanouts.clone(),
        batch_size: a.batch_size,
        seed,
    };
    let batches = sample_batches(&g, &train, &sampler)?;
    let cache = CacheConfig::with_budget(a.cache_bytes);
    let cost = match &a.cost {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<CostModel>(&text).with_context(|| format!("parsing cost model {}", p.display()))?
        }
        None => CostModel::default().calibrated(&g, &batches, &full, &cache, a.load_fraction)?,
    };

    let baseline = simulate_epoch(&g, &batches, &full, &cache, &cost)?;
    let mut variant = simulate_epoch(&g, &batches, &codec, &cache, &cost)?;
    variant.speedup_vs_baseline = baseline.epoch_s / variant.epoch_s;

    let mut doc = serde_json::to_value(variant)?;
    doc["meta"] = meta.to_json();
    doc["codec"] = json!(a.codec);
    doc["codec_cost"] = serde_json::to_value(codec)?;
    doc["workload"] = serde_json::to_value(Workload::of(&batches))?;
    doc["cost_model"] = serde_json::to_value(cost)?;
    doc["baseline"] = serde_json::to_value(baseline)?;
    if a.workers > 1 {
        let sweep: Result<Vec<Value>> = (1..=a.workers)
            .map(|w| {
                let f = simulate_workers(&g, &batches, &full, &cache, &cost, w)?.epoch_s;
                let c = simulate_workers(&g, &batches, &codec, &cache, &cost, w)?.epoch_s;
                Ok(json!({ "workers": w, "baseline_epoch_s": f, "epoch_s": c }))
            })
            .collect();
        doc["worker_sweep"] = Value::Array(sweep?);
    }
    if a.measure {
        doc["measured"] = measure_decode(&batches, codec_file.as_ref(), features.as_ref())?;
    }
    write_json(a.out.as_deref(), &doc)
}

fn read_variant(path: &Path) -> Result<Variant> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let field = |k: &str| {
        doc.get(k)
            .cloned()
            .with_context(|| format!("{} has no {k:?}; is it a simulate output?", path.display()))
    };
    Ok(Variant {
        name: serde_json::from_value(field("codec")?)?,
        workload: serde_json::from_value(field("workload")?)?,
        report: serde_json::from_value::<SimReport>(doc.clone())?,
    })
}

fn report_cmd(a: &Report, meta: &Meta) -> Result<()> {
    let variants: Vec<Variant> = a.inputs.iter().map(|p| read_variant(p)).collect::<Result<_>>()?;
    let rows = report(&variants[0], &variants[1..])?;
    match a.format {
        ReportFormat::Json => write_json(a.out.as_deref(), &json!({ "meta": meta.to_json(), "rows": rows })),
        ReportFormat::Csv => write_text(a.out.as_deref(), &format!("{}\n{}", meta.comment_line(), render_csv(&rows))),
        ReportFormat::Text => write_text(a.out.as_deref(), &format!("{}\n{}", meta.comment_line(), render_text(&rows))),
    }
}

