//! Command-line model for gcc/clang-style compiler drivers.

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverMode {
    /// `-c`
    Compile,
    /// `-S`
    Assemble,
    /// `-E`
    Preprocess,
    Link,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DepFlags {
    /// `-MD` or `-MMD`
    pub writes_depfile: bool,
    /// `-MMD`/`-MM`: system headers left out
    pub user_only: bool,
    /// `-M`/`-MM` without `-MD`: preprocess for dependencies only
    pub deps_only: bool,
    pub depfile: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverArgs {
    pub mode: DriverMode,
    pub output: Option<String>,
    /// Source inputs, in command order.
    pub sources: Vec<String>,
    /// Non-source positional inputs (objects, archives, libraries).
    pub objects: Vec<String>,
    pub include_dirs: Vec<String>,
    pub deps: DepFlags,
}

/// Options whose value is the following argument when not joined.
const TAKES_ARG: &[&str] = &[
    "-o",
    "-I",
    "-D",
    "-U",
    "-include",
    "-imacros",
    "-isystem",
    "-iquote",
    "-idirafter",
    "-iprefix",
    "-iwithprefix",
    "-iwithprefixbefore",
    "-isysroot",
    "-imultilib",
    "-x",
    "-MF",
    "-MT",
    "-MQ",
    "-MJ",
    "-L",
    "-l",
    "-Xlinker",
    "-Xassembler",
    "-Xpreprocessor",
    "-Xclang",
    "-mllvm",
    "-T",
    "-aux-info",
    "-arch",
    "-target",
    "--target",
    "-u",
    "-z",
    "-e",
    "-B",
    "--sysroot",
    "-include-pch",
    "-dumpdir",
    "-dumpbase",
    "-dumpbase-ext",
    "-G",
    "-Xarch_host",
    "-Xarch_device",
    "-Xopenmp-target",
    "-specs",
    "--param",
    "-Xanalyzer",
    "-Xcuda-fatbinary",
    "-Xcuda-ptxas",
    "-framework",
    "-F",
];

/// Prefix options that may carry their value joined (`-Ifoo`, `-DX=1`).
const JOINABLE: &[&str] = &[
    "-o", "-I", "-D", "-U", "-x", "-L", "-l", "-T", "-u", "-z", "-e", "-B", "-G", "-F",
];

const SOURCE_EXTS: &[&str] = &[
    "c", "i", "ii", "cc", "cp", "cxx", "cpp", "CPP", "c++", "C", "m", "mi", "mm", "M", "mii", "s",
    "S", "sx", "f", "for", "f90", "f95", "F", "F90", "go", "d", "ads", "adb",
];

pub fn is_source(path: &str, lang: Option<&str>) -> bool {
    match lang {
        Some("none") | None => Path::new(path)
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTS.contains(&e)),
        Some(_) => true,
    }
}

pub fn is_assembly(path: &str) -> bool {
    matches!(
        Path::new(path).extension().and_then(|e| e.to_str()),
        Some("s" | "S" | "sx")
    )
}

impl DriverArgs {
    pub fn parse(args: &[String]) -> DriverArgs {
        let mut mode = DriverMode::Link;
        let mut output = None;
        let mut sources = Vec::new();
        let mut objects = Vec::new();
        let mut include_dirs = Vec::new();
        let mut deps = DepFlags::default();
        let mut deps_m = false;
        let mut lang: Option<String> = None;

        let mut i = 0;
        while i < args.len() {
            let a = args[i].as_str();
            let next = args.get(i + 1).map(String::as_str);
            i += 1;
            if a == "-" {
                sources.push(a.to_string());
                continue;
            }
            if !a.starts_with('-') {
                if is_source(a, lang.as_deref()) {
                    sources.push(a.to_string());
                } else {
                    objects.push(a.to_string());
                }
                continue;
            }
            match a {
                "-c" if mode == DriverMode::Link => mode = DriverMode::Compile,
                "-S" if mode != DriverMode::Preprocess => mode = DriverMode::Assemble,
                "-E" => mode = DriverMode::Preprocess,
                "-MD" => deps.writes_depfile = true,
                "-MMD" => {
                    deps.writes_depfile = true;
                    deps.user_only = true;
                }
                "-M" => deps_m = true,
                "-MM" => {
                    deps_m = true;
                    deps.user_only = true;
                }
                _ => {}
            }
            if TAKES_ARG.contains(&a) {
                if let Some(v) = next {
                    i += 1;
                    match a {
                        "-o" => output = Some(v.to_string()),
                        "-I" | "-isystem" | "-iquote" | "-idirafter" => {
                            include_dirs.push(v.to_string())
                        }
                        "-MF" => deps.depfile = Some(v.to_string()),
                        "-x" => lang = Some(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if let Some(v) = a.strip_prefix("--sysroot=") {
                let _ = v;
                continue;
            }
            if let Some(v) = a.strip_prefix("-MF") {
                deps.depfile = Some(v.to_string());
                continue;
            }
            for p in JOINABLE {
                if let Some(v) = a.strip_prefix(p) {
                    if a.len() > p.len() && !a.starts_with("-MF") {
                        match *p {
                            "-o" => output = Some(v.to_string()),
                            "-I" => include_dirs.push(v.to_string()),
                            "-x" => lang = Some(v.to_string()),
                            _ => {}
                        }
                    }
                    break;
                }
            }
            for p in ["-isystem", "-iquote", "-idirafter"] {
                if let Some(v) = a.strip_prefix(p) {
                    if !v.is_empty() {
                        include_dirs.push(v.to_string());
                    }
                }
            }
        }
        if deps_m && !deps.writes_depfile {
            deps.deps_only = true;
        }
        DriverArgs {
            mode,
            output,
            sources,
            objects,
            include_dirs,
            deps,
        }
    }

    /// Whether this invocation has no inputs at all (`cc --version`).
    pub fn has_inputs(&self) -> bool {
        !self.sources.is_empty() || !self.objects.is_empty()
    }

    /// Output path of a single-source compile, following the driver's
    /// default naming when `-o` is absent.
    pub fn output_for(&self, source: &str) -> Option<String> {
        if let Some(o) = &self.output {
            return Some(o.clone());
        }
        let stem = Path::new(source)
            .file_stem()?
            .to_string_lossy()
            .into_owned();
        match self.mode {
            DriverMode::Compile => Some(format!("{stem}.o")),
            DriverMode::Assemble => Some(format!("{stem}.s")),
            DriverMode::Preprocess => None,
            DriverMode::Link => Some("a.out".into()),
        }
    }

    /// Where a `-MD` depfile lands when `-MF` is not given.
    pub fn default_depfile(&self, source: &str) -> PathBuf {
        if let Some(o) = &self.output {
            if self.mode != DriverMode::Preprocess {
                return Path::new(o).with_extension("d");
            }
        }
        let stem = Path::new(source)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        PathBuf::from(format!("{stem}.d"))
    }
}

/// Arguments for a dependency-only preprocessing run over `source`:
/// outputs, modes, depfile flags, link inputs and other sources removed.
pub fn dependency_pass_args(args: &[String], source: &str, depfile: &Path) -> Vec<String> {
    let parsed = DriverArgs::parse(args);
    let mut out = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let a = args[i].as_str();
        i += 1;
        let drop_with_value = [
            "-o", "-MF", "-MT", "-MQ", "-MJ", "-Xlinker", "-L", "-l", "-T", "-u", "-z", "-e",
        ];
        if drop_with_value.contains(&a) {
            i += 1;
            continue;
        }
        if TAKES_ARG.contains(&a) {
            out.push(a.to_string());
            if let Some(v) = args.get(i) {
                out.push(v.clone());
            }
            i += 1;
            continue;
        }
        let drop = matches!(
            a,
            "-c" | "-S"
                | "-E"
                | "-MD"
                | "-MMD"
                | "-M"
                | "-MM"
                | "-MP"
                | "-MG"
                | "-shared"
                | "-static"
                | "-pie"
                | "-rdynamic"
                | "-s"
        ) || ["-MF", "-MT", "-MQ", "-Wl,", "-L", "-l", "-o"]
            .iter()
            .any(|p| a.starts_with(p) && a.len() > p.len())
            || parsed.sources.iter().any(|s| s == a)
            || parsed.objects.iter().any(|s| s == a);
        if !drop {
            out.push(a.to_string());
        }
    }
    out.extend([
        "-M".to_string(),
        "-MF".to_string(),
        depfile.to_string_lossy().into_owned(),
        source.to_string(),
    ]);
    out
}

/// Expand `@file` response-file arguments (whitespace separated, shell quoting).
pub fn expand_response_files(args: &[String], cwd: &Path) -> Vec<String> {
    fn go(args: &[String], cwd: &Path, depth: usize, out: &mut Vec<String>) {
        for a in args {
            if let Some(file) = a.strip_prefix('@') {
                if depth < 16 {
                    if let Ok(text) = std::fs::read_to_string(cwd.join(file)) {
                        let inner = shlex::split(&text).unwrap_or_else(|| {
                            text.split_whitespace().map(str::to_string).collect()
                        });
                        go(&inner, cwd, depth + 1, out);
                        continue;
                    }
                }
            }
            out.push(a.clone());
        }
    }
    let mut out = Vec::new();
    go(args, cwd, 0, &mut out);
    out
}
