use std::io::{Read, Write};
use std::time::Instant;

use interference::certify::{mean_occupation_test, suppression_certification, symmetric_test, uniform_discrimination};
use interference::entangle::{bipartition_rank, multipartite_coefficients, QuditStateTensor};
use interference::fock::enumerate_arrangements;
use interference::linalg::{ginibre, permanent};
use interference::partialdist::{fwhm, grid, multimode_signal, two_mode_signal, Scan, WavepacketSet, SPEED_OF_LIGHT};
use interference::sampling::sample;
use interference::suppression::{boson_suppressed, fermion_suppressed, suppressed_fraction, Direction};
use interference::transition::{full_distribution, probability, probability_bruteforce};
use interference::{Arrangement, ComplexMatrix, Species};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::formats::{self, DeviceSpec, Header, Table};
use crate::{
    BenchArgs, CertifyArgs, Cli, Command, DeviceArgs, DistArgs, EntangleArgs, Failure, HomScanArgs, MultimodeScanArgs,
    PacketArgs, ProbArgs, SampleArgs, SuppressionArgs, TestKind,
};

pub(crate) fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let out = Output { cli };
    match &cli.command {
        Command::Prob(a) => prob(&out, a),
        Command::Dist(a) => dist(&out, a),
        Command::Sample(a) => sample_cmd(&out, a),
        Command::Suppression(a) => suppression(&out, a),
        Command::Certify(a) => certify(&out, a),
        Command::HomScan(a) => hom_scan(&out, a),
        Command::MultimodeScan(a) => multimode_scan(&out, a),
        Command::Entangle(a) => entangle(&out, a),
        Command::Bench(a) => bench(&out, a),
    }
}

struct Output<'a> {
    cli: &'a Cli,
}

impl Output<'_> {
    fn header(&self, command: &str, seed: Option<u64>, inputs: &[String]) -> Header {
        let mut h = Header::new(command, seed, inputs);
        if !self.cli.no_timestamp {
            h.stamp();
        }
        h
    }

    fn write_file(&self, path: &std::path::Path, text: &str) -> Result<(), Failure> {
        std::fs::write(path, text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
    }

    /// `document` already carries its header.
    fn emit(&self, document: &str) -> Result<(), Failure> {
        match &self.cli.out {
            Some(p) => self.write_file(p, document),
            None => write_stdout(document),
        }
    }

    /// Short answers go bare to the terminal and with a header to files.
    fn emit_answer(&self, header: &Header, body: &str) -> Result<(), Failure> {
        match &self.cli.out {
            Some(p) => self.write_file(p, &format!("{header}{body}")),
            None => write_stdout(body),
        }
    }
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(Failure::from),
    }
}

fn load_device(out: &Output, args: &DeviceArgs) -> Result<ComplexMatrix, Failure> {
    let u = args.device.load()?;
    if let Some(path) = &args.save_device {
        let header = out.header("device", None, &[u.digest()]);
        out.write_file(path, &format!("{header}{}", formats::to_json(&u)))?;
    }
    Ok(u)
}

fn prob(out: &Output, a: &ProbArgs) -> Result<(), Failure> {
    let u = load_device(out, &a.device)?;
    let p = if a.bruteforce {
        probability_bruteforce(a.species, &a.r, &a.s, &u)?
    } else {
        probability(a.species, &a.r, &a.s, &u)?
    };
    let inputs = [a.species.to_string(), a.r.to_string(), a.s.to_string(), u.digest(), a.bruteforce.to_string()];
    let mut h = out.header("prob", None, &inputs);
    h.push("species", a.species);
    h.push("device", u.digest());
    out.emit_answer(&h, &format!("{p}\n"))
}

fn dist(out: &Output, a: &DistArgs) -> Result<(), Failure> {
    let u = load_device(out, &a.device)?;
    let d = full_distribution(a.species, &a.r, &u)?;
    let mut h = out.header("dist", None, &[a.species.to_string(), a.r.to_string(), u.digest()]);
    h.push("species", a.species);
    h.push("input", &a.r);
    h.push("device", u.digest());
    let rows: Vec<(Arrangement, f64)> = d.arrangements.into_iter().zip(d.probabilities).collect();
    out.emit(&formats::write_distribution(&h, &rows))
}

fn sample_cmd(out: &Output, a: &SampleArgs) -> Result<(), Failure> {
    let u = load_device(out, &a.device)?;
    let stream = sample(a.source, &a.r, &u, a.k, a.seed)?;
    let inputs = [a.source.to_string(), a.r.to_string(), u.digest(), a.k.to_string()];
    let mut h = out.header("sample", Some(a.seed), &inputs);
    for (k, v) in formats::stream_header_entries(&stream) {
        h.push(k, v);
    }
    out.emit(&formats::write_stream(&h, &stream))
}

fn suppression(out: &Output, a: &SuppressionArgs) -> Result<(), Failure> {
    let n = a.n.unwrap_or(a.r.modes());
    let inputs = [a.species.to_string(), a.r.to_string(), a.s.as_ref().map_or(String::new(), |s| s.to_string()), n.to_string()];
    let h = out.header("suppression", None, &inputs);
    let body = match &a.s {
        Some(s) => {
            let verdict = match a.species {
                Species::Boson => boson_suppressed(&a.r, s, n)?,
                Species::Fermion => fermion_suppressed(&a.r, s, n)?,
                Species::Distinguishable => {
                    return Err(Failure::Domain("the suppression laws cover bosons and fermions only".into()))
                }
            };
            let mut body = String::from(if verdict.suppressed { "suppressed\n" } else { "allowed\n" });
            for w in &verdict.witnesses {
                let dir = match w.direction {
                    Direction::Forward => "forward",
                    Direction::Reversed => "reversed",
                };
                body.push_str(&format!("witness {dir} m={} p={} Q={} Q mod {n} = {}\n", w.m, w.p, w.q, w.residue));
            }
            body
        }
        None => {
            if a.species != Species::Boson {
                return Err(Failure::Domain("the suppressed fraction is defined for bosons".into()));
            }
            let f = suppressed_fraction(&a.r, n)?;
            format!(
                "suppressed {} of {} outputs\nfraction {}\nestimate {}\n",
                f.suppressed, f.total, f.exact, f.estimate
            )
        }
    };
    out.emit_answer(&h, &body)
}

fn certify(out: &Output, a: &CertifyArgs) -> Result<(), Failure> {
    let (text, origin) = if a.events == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        (s, "<stdin>".to_string())
    } else {
        let p = std::path::PathBuf::from(&a.events);
        (formats::read_text(&p)?, a.events.clone())
    };
    let stream = formats::read_stream(&text, &origin)?;
    let r = a.r.clone().unwrap_or_else(|| stream.input.clone());
    let device = |spec: &Option<DeviceSpec>| -> Result<ComplexMatrix, Failure> {
        spec.as_ref()
            .ok_or_else(|| Failure::Usage(format!("--device is required for the {:?} test", a.test)))?
            .load()
    };
    let report = match a.test {
        TestKind::Symmetric => symmetric_test(&stream),
        TestKind::MeanOccupation => mean_occupation_test(&stream, &r, &device(&a.device)?, a.z)?,
        TestKind::AaDiscriminator => uniform_discrimination(&stream, &r, &device(&a.device)?)?,
        TestKind::Suppression => suppression_certification(&stream, &r, stream.modes(), a.allowed_violations)?,
    };
    let inputs = [text, format!("{:?}", a.test), r.to_string(), a.z.to_string(), a.allowed_violations.to_string()];
    let mut h = out.header("certify", None, &inputs);
    h.push("stream-source", stream.source);
    h.push("stream-seed", stream.seed);
    h.push("input", &r);
    out.emit(&format!("{h}{}", formats::to_json(&report)))
}

fn packets(p: &PacketArgs) -> Result<(WavepacketSet, Vec<f64>), Failure> {
    if p.points < 3 {
        return Err(Failure::Usage("--points must be at least 3".into()));
    }
    let wp = WavepacketSet::from_wavelengths(p.lambda, p.dlambda)?;
    let lc = wp.coherence_length();
    Ok((wp, grid(-p.span * lc, p.span * lc, p.points)))
}

fn event_column(s: &Arrangement) -> String {
    format!("P({s})")
}

fn record_width(h: &mut Header, s: &Arrangement, scan: &Scan) {
    h.push(&format!("baseline {}", event_column(s)), scan.baseline);
    match fwhm(scan) {
        Ok(w) => h.push(&format!("fwhm {}", event_column(s)), w),
        Err(e) => h.push(&format!("fwhm {}", event_column(s)), format!("undefined ({e})")),
    }
}

fn hom_scan(out: &Output, a: &HomScanArgs) -> Result<(), Failure> {
    let [r1, r2] = a.r.occupations() else {
        return Err(Failure::Domain(format!("hom-scan needs a two-mode input, got {}", a.r)));
    };
    let (r1, r2) = (*r1, *r2);
    let u = a.device.load()?;
    let (wp, xs) = packets(&a.packets)?;
    let events = if a.s.is_empty() { enumerate_arrangements(r1 + r2, 2)? } else { a.s.clone() };
    for s in &events {
        if s.modes() != 2 || s.particles() != r1 + r2 {
            return Err(Failure::Domain(format!("event {s} does not match input {}", a.r)));
        }
    }
    let signals = xs
        .par_iter()
        .map(|&x| two_mode_signal(r1, r2, &u, wp.overlap_sq_at(x)))
        .collect::<Result<Vec<_>, _>>()?;
    let far = two_mode_signal(r1, r2, &u, 0.0)?;
    let inputs = [a.r.to_string(), format!("{:?}", events), u.digest(), format!("{:?}", a.packets)];
    let mut h = out.header("hom-scan", None, &inputs);
    h.push("input", &a.r);
    h.push("device", u.digest());
    h.push("coherence-length", wp.coherence_length());
    let mut table = Table { columns: vec!["x".into()], rows: xs.iter().map(|&x| vec![x]).collect() };
    for s in &events {
        let s1 = s.occupations()[0];
        let signal: Vec<f64> = signals.iter().map(|p| p[s1]).collect();
        record_width(&mut h, s, &Scan { x: xs.clone(), signal: signal.clone(), baseline: far[s1] });
        table.columns.push(event_column(s));
        for (row, v) in table.rows.iter_mut().zip(signal) {
            row.push(v);
        }
    }
    out.emit(&table.render(&h))
}

fn multimode_scan(out: &Output, a: &MultimodeScanArgs) -> Result<(), Failure> {
    let n = a.r.modes();
    if a.direction.len() != n {
        return Err(Failure::Usage(format!("--direction has {} entries for {n} modes", a.direction.len())));
    }
    let u = a.device.load()?;
    let (wp, xs) = packets(&a.packets)?;
    let events = if a.s.is_empty() { enumerate_arrangements(a.r.particles(), n)? } else { a.s.clone() };
    let times = |x: f64| a.direction.iter().map(|c| c * x / SPEED_OF_LIGHT).collect::<Vec<_>>();
    let dists = xs
        .par_iter()
        .map(|&x| multimode_signal(&a.r, &u, &times(x), &wp))
        .collect::<Result<Vec<_>, _>>()?;
    let far = multimode_signal(&a.r, &u, &times(1e3 * wp.coherence_length()), &wp)?;
    let lookup = |d: &interference::transition::Distribution, s: &Arrangement| {
        d.get(s).ok_or_else(|| Failure::Domain(format!("event {s} does not match input {}", a.r)))
    };
    let inputs = [a.r.to_string(), format!("{:?}", events), u.digest(), format!("{:?}", a.direction), format!("{:?}", a.packets)];
    let mut h = out.header("multimode-scan", None, &inputs);
    h.push("input", &a.r);
    h.push("device", u.digest());
    h.push("direction", a.direction.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    h.push("coherence-length", wp.coherence_length());
    let mut table = Table { columns: vec!["x".into()], rows: xs.iter().map(|&x| vec![x]).collect() };
    for s in &events {
        let signal = dists.iter().map(|d| lookup(d, s)).collect::<Result<Vec<_>, _>>()?;
        record_width(&mut h, s, &Scan { x: xs.clone(), signal: signal.clone(), baseline: lookup(&far, s)? });
        table.columns.push(event_column(s));
        for (row, v) in table.rows.iter_mut().zip(signal) {
            row.push(v);
        }
    }
    out.emit(&table.render(&h))
}

fn nested(t: &QuditStateTensor, prefix: &mut Vec<usize>) -> Value {
    if prefix.len() == t.parties {
        let z = t.get(prefix);
        return json!([z.re, z.im]);
    }
    let mut items = Vec::with_capacity(t.dim);
    for j in 0..t.dim {
        prefix.push(j);
        items.push(nested(t, prefix));
        prefix.pop();
    }
    Value::Array(items)
}

fn entangle(out: &Output, a: &EntangleArgs) -> Result<(), Failure> {
    let text = formats::read_text(&a.w)?;
    let w: ComplexMatrix = formats::parse_json(&text, a.w.display())?;
    let t = multipartite_coefficients(&w, a.species, a.d)?;
    // Each bipartition once: subsets that leave out the last party.
    let mut cuts = Vec::new();
    for mask in 1usize..(1 << (t.parties - 1)) {
        let cut: Vec<usize> = (0..t.parties).filter(|k| mask >> k & 1 == 1).collect();
        let rank = match bipartition_rank(&t, &cut, a.tol) {
            Ok(r) => json!(r),
            Err(interference::Error::RankUndefined(_)) => Value::Null,
            Err(e) => return Err(e.into()),
        };
        cuts.push(json!({ "cut": cut.iter().map(|k| k + 1).collect::<Vec<_>>(), "rank": rank }));
    }
    let report = json!({
        "species": a.species.to_string(),
        "parties": t.parties,
        "dim": t.dim,
        "tensor": nested(&t, &mut Vec::new()),
        "norm": t.postselection_probability().sqrt(),
        "postselection_probability": t.postselection_probability(),
        "cut_ranks": cuts,
    });
    let inputs = [w.digest(), a.species.to_string(), a.d.to_string(), a.tol.to_string()];
    let mut h = out.header("entangle", None, &inputs);
    h.push("device", w.digest());
    out.emit(&format!("{h}{}", formats::to_json(&report)))
}

fn bench(out: &Output, a: &BenchArgs) -> Result<(), Failure> {
    if a.min == 0 || a.min > a.max {
        return Err(Failure::Usage(format!("empty order range {}..={}", a.min, a.max)));
    }
    if a.repeats == 0 {
        return Err(Failure::Usage("--repeats must be positive".into()));
    }
    let mut table = Table { columns: vec!["N".into(), "wall_time".into()], rows: Vec::new() };
    for n in a.min..=a.max {
        let m = ginibre(n, n, a.seed.wrapping_add(n as u64))?;
        let mut best = f64::INFINITY;
        for _ in 0..a.repeats {
            let start = Instant::now();
            std::hint::black_box(permanent(std::hint::black_box(&m))?);
            best = best.min(start.elapsed().as_secs_f64());
        }
        table.rows.push(vec![n as f64, best]);
    }
    let h = out.header("bench", Some(a.seed), &[a.min.to_string(), a.max.to_string(), a.repeats.to_string()]);
    out.emit(&table.render(&h))
}
