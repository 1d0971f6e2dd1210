//! `finalg` command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use finalg::abelian::analyze;
use finalg::csp::{build_reduction, solve_csp, OneInThreeInstance};
use finalg::format::{parse_algebra, serialize_algebra, serialize_structure};
use finalg::free::{ab_free, ab_free_bound, free_algebra, matrix_power};
use finalg::homenum::{counting_profile, enumerate_with, profile_csv, Family, HomSet, Method};
use finalg::lattice::all_congruences;
use finalg::pieces::PieceContext;
use finalg::tct::tct_report;
use finalg::{Elem, Error, FiniteAlgebra};

#[derive(Parser)]
#[command(name = "finalg", version, about = "Finite universal algebra workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Special,
    Pieces,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Chain,
    Antichain,
    Abfree,
    Power,
}

#[derive(clap::Args)]
struct HomArgs {
    /// Source algebra file.
    #[arg(long)]
    from: PathBuf,
    /// Target algebra file.
    #[arg(long)]
    to: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Largest source size handled by brute force under `--method auto`.
    #[arg(long, default_value_t = 8)]
    threshold: usize,
    /// Print the pieces recursion trace (pieces method only).
    #[arg(long)]
    trace_pieces: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classification report for an algebra.
    Analyze {
        file: PathBuf,
        /// Add minimal sets and cover types.
        #[arg(long)]
        tct: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Number of homomorphisms and surjective homomorphisms.
    Count(HomArgs),
    /// List every homomorphism.
    Enumerate(HomArgs),
    /// List every surjective homomorphism.
    Surjective(HomArgs),
    /// The n-generated free algebra in the variety of an algebra.
    Free {
        #[arg(long)]
        to: PathBuf,
        #[arg(long)]
        n: usize,
        /// Write the algebra to a file (`-` or no value: standard output).
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        emit: Option<PathBuf>,
    },
    /// The ab-free algebra on n generators.
    Abfree {
        #[arg(long)]
        to: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        pair: (Elem, Elem),
        #[arg(long)]
        n: usize,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        emit: Option<PathBuf>,
    },
    /// The k-th matrix power of a y-element set.
    Matrixpower {
        #[arg(long)]
        y: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, num_args = 0..=1, default_missing_value = "-")]
        emit: Option<PathBuf>,
    },
    /// Reduce a 1-in-3 instance to a homomorphism problem and solve it.
    Reduce1in3 {
        #[arg(long)]
        inst: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        pair: (Elem, Elem),
        /// Write the source and template structures to `<prefix>.src` and `<prefix>.tpl`.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Hom counts along a family of sources, as CSV.
    Profile {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        to: PathBuf,
        #[arg(long)]
        max: usize,
        /// Pair for the abfree family.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(Elem, Elem)>,
        #[arg(long, value_enum, default_value = "brute")]
        method: MethodArg,
        #[arg(long, default_value_t = 8)]
        threshold: usize,
        /// Output file (standard output when absent).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Congruence lattice as a Hasse edge list.
    Lattice { file: PathBuf },
}

fn parse_pair(s: &str) -> Result<(Elem, Elem), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let p = |t: &str| t.trim().parse::<Elem>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: String) -> Self {
        Failure { code: 2, msg }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: if e.is_parse() { 2 } else { 1 }, msg: e.to_string() }
    }
}

type Out = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<FiniteAlgebra, Failure> {
    let text = read(path)?;
    parse_algebra(&text).map_err(|e| {
        let code = if e.is_parse() { 2 } else { 1 };
        Failure { code, msg: format!("{}: {e}", path.display()) }
    })
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", path.display()) })
}

/// Writes to `path`, or returns the text for standard output when `path` is `-`.
fn emit(path: Option<&Path>, text: String, out: &mut String) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => write_out(p, &text),
        Some(_) => {
            out.push_str(&text);
            Ok(())
        }
        None => Ok(()),
    }
}

fn method_of(m: MethodArg, threshold: usize) -> Method {
    match m {
        MethodArg::Brute => Method::Brute,
        MethodArg::Special => Method::Special,
        MethodArg::Pieces => Method::Pieces,
        MethodArg::Auto => Method::Auto { threshold },
    }
}

fn homs(args: &HomArgs) -> Result<(HomSet, Option<usize>, String), Failure> {
    let x = load(&args.from)?;
    let a = load(&args.to)?;
    if args.trace_pieces {
        let mut ctx = PieceContext::new(&a)?;
        ctx.enable_trace();
        let set = ctx.enumerate_all(&x)?;
        return Ok((set, Some(ctx.stats.max_candidates), ctx.trace_text()));
    }
    let (set, cands) = enumerate_with(&x, &a, method_of(args.method, args.threshold))?;
    Ok((set, cands, String::new()))
}

fn list(out: &mut String, set: &HomSet) {
    writeln!(out, "count={}", set.len()).unwrap();
    for h in set.maps() {
        writeln!(out, "hom={h}").unwrap();
    }
}

fn run(cli: Cli) -> Out {
    let mut out = String::new();
    match cli.cmd {
        Cmd::Analyze { file, tct, format } => {
            let a = load(&file)?;
            let report = analyze(&a)?;
            out.push_str(&match format {
                Format::Text => report.to_text(),
                Format::Kv => report.to_kv(),
            });
            if tct {
                let t = tct_report(&a)?;
                match format {
                    Format::Text => {
                        out.push_str("tct:\n");
                        out.push_str(&t);
                    }
                    Format::Kv => {
                        for (i, line) in t.lines().enumerate() {
                            writeln!(out, "tct.{i}={}", line.trim()).unwrap();
                        }
                    }
                }
            }
        }
        Cmd::Count(args) => {
            let (set, cands, trace) = homs(&args)?;
            out.push_str(&trace);
            writeln!(out, "homs={}", set.len()).unwrap();
            writeln!(out, "surjective_homs={}", set.surjective().len()).unwrap();
            if let Some(c) = cands {
                writeln!(out, "max_candidates={c}").unwrap();
            }
        }
        Cmd::Enumerate(args) => {
            let (set, _, trace) = homs(&args)?;
            out.push_str(&trace);
            list(&mut out, &set);
        }
        Cmd::Surjective(args) => {
            let (set, _, trace) = homs(&args)?;
            out.push_str(&trace);
            list(&mut out, &set.surjective());
        }
        Cmd::Free { to, n, emit: path } => {
            let a = load(&to)?;
            let f = free_algebra(&a, n)?;
            writeln!(out, "size={}", f.algebra.size()).unwrap();
            writeln!(out, "generators={}", join(&f.generators)).unwrap();
            emit(path.as_deref(), serialize_algebra(&f.algebra), &mut out)?;
        }
        Cmd::Abfree { to, pair: (a0, b0), n, emit: path } => {
            let a = load(&to)?;
            let f = ab_free(&a, a0, b0, n)?;
            writeln!(out, "size={}", f.algebra.size()).unwrap();
            writeln!(out, "bound={}", ab_free_bound(n, a.size())).unwrap();
            writeln!(out, "generators={}", join(&f.generators)).unwrap();
            emit(path.as_deref(), serialize_algebra(&f.algebra), &mut out)?;
        }
        Cmd::Matrixpower { y, k, emit: path } => {
            let m = matrix_power(y, k)?;
            writeln!(out, "size={}", m.size()).unwrap();
            emit(path.as_deref(), serialize_algebra(&m), &mut out)?;
        }
        Cmd::Reduce1in3 { inst, to, pair: (a0, b0), emit: prefix } => {
            let text = read(&inst)?;
            let instance = OneInThreeInstance::parse(&text)
                .map_err(|e| Failure { code: 2, msg: format!("{}: {e}", inst.display()) })?;
            let a = load(&to)?;
            let r = build_reduction(&instance, &a, a0, b0)?;
            if let Some(w) = &r.warning {
                writeln!(out, "warning={w}").unwrap();
            }
            writeln!(out, "vars={}", r.instance.vars).unwrap();
            writeln!(out, "clauses={}", r.instance.clauses.len()).unwrap();
            writeln!(out, "free_size={}", r.free.algebra.size()).unwrap();
            writeln!(out, "bound={}", ab_free_bound(r.instance.vars.max(1), a.size())).unwrap();
            match solve_csp(&r.source, &r.template)? {
                Some(h) => {
                    writeln!(out, "satisfiable=true").unwrap();
                    let bits: Vec<&str> = r.assignment(&h, b0).iter().map(|&t| if t { "1" } else { "0" }).collect();
                    writeln!(out, "assignment={}", bits.join(",")).unwrap();
                }
                None => writeln!(out, "satisfiable=false").unwrap(),
            }
            if let Some(p) = prefix {
                write_out(&p.with_extension("src"), &serialize_structure(&r.source))?;
                write_out(&p.with_extension("tpl"), &serialize_structure(&r.template))?;
            }
        }
        Cmd::Profile { family, to, max, pair, method, threshold, csv } => {
            let a = load(&to)?;
            let fam = match family {
                FamilyArg::Chain => Family::Chain,
                FamilyArg::Antichain => Family::Antichain,
                FamilyArg::Power => Family::Power,
                FamilyArg::Abfree => {
                    let (a0, b0) = pair.ok_or_else(|| Failure::input("--family abfree needs --pair a,b".into()))?;
                    Family::AbFree { a: a0, b: b0 }
                }
            };
            let rows = counting_profile(&fam, &a, max, method_of(method, threshold))?;
            let text = profile_csv(&rows);
            match csv {
                Some(p) => write_out(&p, &text)?,
                None => out.push_str(&text),
            }
        }
        Cmd::Lattice { file } => {
            let a = load(&file)?;
            out.push_str(&all_congruences(&a)?.hasse_text());
        }
    }
    Ok(out)
}

fn join(xs: &[Elem]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
