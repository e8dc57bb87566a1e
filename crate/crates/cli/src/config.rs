//! Study configuration files: `key = value` lines grouped under `[section]`
//! headers, `#` or `;` starting a comment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use divcurl::fespace::{BoundaryCondition, Identification, SequenceSpec};
use divcurl::mesh::Domain;
use divcurl::solver::{PreconditionerKind, ReferenceField, SolverOptions};
use divcurl::Error;

/// Parsed file: section -> key -> (value, line number).
#[derive(Clone, Debug, Default)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut ini = Ini::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
                continue;
            }
            if let Some(rest) = t.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("unterminated section header '{t}'"),
                })?;
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(Error::Parse {
                        line,
                        msg: "empty section name".into(),
                    });
                }
                ini.sections.entry(section.clone()).or_default();
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected 'key = value', found '{t}'"),
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "missing key".into(),
                });
            }
            if section.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: format!("key '{key}' outside any section"),
                });
            }
            let entries = ini.sections.entry(section.clone()).or_default();
            if let Some((_, first)) = entries.get(key) {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate key '{section}.{key}' (first set on line {first})"),
                });
            }
            entries.insert(key.to_string(), (v.trim().to_string(), line));
        }
        Ok(ini)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.sections.get(section)?.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn keys(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.sections
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(k, (_, l))| (s.as_str(), k.as_str(), *l)))
    }
}

const KNOWN: &[(&str, &str)] = &[
    ("problem", "domain"),
    ("problem", "sequence"),
    ("problem", "identification"),
    ("problem", "bc"),
    ("problem", "reference"),
    ("problem", "degree"),
    ("study", "levels"),
    ("solver", "tol"),
    ("solver", "max_iter"),
    ("solver", "preconditioner"),
    ("output", "csv"),
    ("output", "svg"),
    ("output", "solution"),
    ("output", "harmonic"),
];

/// Effective configuration with every default resolved.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub domain: Domain,
    /// As written in the file; resolved against the domain dimension.
    pub sequence_name: String,
    pub sequence: SequenceSpec,
    pub identification: Identification,
    pub bc: BoundaryCondition,
    pub reference: Option<ReferenceField>,
    pub degree: usize,
    pub levels: usize,
    pub options: SolverOptions,
    pub csv: PathBuf,
    /// Empty disables the plot.
    pub svg: Option<PathBuf>,
    pub solution: PathBuf,
    pub harmonic: PathBuf,
}

fn parse_err(line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

impl StudyConfig {
    pub fn from_str(text: &str) -> Result<Self, Error> {
        let ini = Ini::parse(text)?;
        for (s, k, line) in ini.keys() {
            if !KNOWN.contains(&(s, k)) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key '{s}.{k}'"),
                });
            }
        }
        let (domain_text, dline) = ini
            .get("problem", "domain")
            .ok_or_else(|| Error::InvalidArgument("missing required key 'problem.domain'".into()))?;
        let domain: Domain = domain_text.parse().map_err(|e| parse_err(dline, e))?;
        let dim = domain.dim();

        let (sequence_name, sline) = ini.get("problem", "sequence").unwrap_or(("trimmed-r1", 0));
        let sequence = SequenceSpec::parse(sequence_name, dim).map_err(|e| parse_err(sline, e))?;

        let default_ident = if dim == 2 { "div" } else { "none" };
        let (ident_text, iline) = ini.get("problem", "identification").unwrap_or((default_ident, 0));
        let identification: Identification = ident_text.parse().map_err(|e| parse_err(iline, e))?;
        if dim != 2 && identification != Identification::None {
            return Err(parse_err(iline, "identification applies to 2D domains only"));
        }
        if dim == 2 && identification == Identification::None {
            return Err(parse_err(iline, "2D domains need identification 'div' or 'curl'"));
        }

        let (bc_text, bline) = ini.get("problem", "bc").unwrap_or(("natural", 0));
        let bc: BoundaryCondition = bc_text.parse().map_err(|e| parse_err(bline, e))?;

        let default_ref = if dim == 2 { "refd2" } else { "refd3" };
        let (ref_text, rline) = ini.get("problem", "reference").unwrap_or((default_ref, 0));
        let reference = match ref_text {
            "none" | "" => None,
            name => {
                let f = ReferenceField::by_name(name)
                    .ok_or_else(|| parse_err(rline, format!("unknown reference field '{name}'")))?;
                if f.dim != dim {
                    return Err(parse_err(rline, format!("{name} needs a {}D domain", f.dim)));
                }
                Some(f)
            }
        };

        let (deg_text, gline) = ini.get("problem", "degree").unwrap_or(("1", 0));
        let degree: usize = deg_text
            .parse()
            .map_err(|_| parse_err(gline, format!("bad degree '{deg_text}'")))?;
        if degree == 0 || degree >= dim {
            return Err(parse_err(gline, format!("reference degree must lie in 1..{dim}")));
        }

        let (lv_text, lline) = ini.get("study", "levels").unwrap_or(("4", 0));
        let levels: usize = lv_text
            .parse()
            .map_err(|_| parse_err(lline, format!("bad level count '{lv_text}'")))?;

        let mut options = SolverOptions::default();
        if let Some((t, line)) = ini.get("solver", "tol") {
            options.tol = t.parse().map_err(|_| parse_err(line, format!("bad tolerance '{t}'")))?;
            if options.tol.is_nan() || options.tol <= 0.0 {
                return Err(parse_err(line, "tolerance must be positive"));
            }
        }
        if let Some((t, line)) = ini.get("solver", "max_iter") {
            options.max_iter = t
                .parse()
                .map_err(|_| parse_err(line, format!("bad iteration limit '{t}'")))?;
        }
        if let Some((t, line)) = ini.get("solver", "preconditioner") {
            options.preconditioner = t.parse::<PreconditionerKind>().map_err(|e| parse_err(line, e))?;
        }

        let path = |key: &str, default: &str| PathBuf::from(ini.get("output", key).map_or(default, |(v, _)| v));
        let svg = path("svg", "report.svg");
        Ok(StudyConfig {
            domain,
            sequence_name: sequence_name.to_string(),
            sequence,
            identification,
            bc,
            reference,
            degree,
            levels,
            options,
            csv: path("csv", "report.csv"),
            svg: (!svg.as_os_str().is_empty()).then_some(svg),
            solution: path("solution", "solution"),
            harmonic: path("harmonic", "harmonic"),
        })
    }

    /// The configuration as a file that parses back to the same settings.
    pub fn to_ini(&self) -> String {
        let reference = self.reference.as_ref().map_or("none", |r| r.name.as_str());
        let svg = self.svg.as_ref().map_or(String::new(), |p| p.display().to_string());
        format!(
            "[problem]\n\
             domain = {}\n\
             sequence = {}\n\
             identification = {}\n\
             bc = {}\n\
             reference = {}\n\
             degree = {}\n\
             \n\
             [study]\n\
             levels = {}\n\
             \n\
             [solver]\n\
             tol = {:e}\n\
             max_iter = {}\n\
             preconditioner = {}\n\
             \n\
             [output]\n\
             csv = {}\n\
             svg = {}\n\
             solution = {}\n\
             harmonic = {}\n",
            self.domain,
            self.sequence_name,
            self.identification,
            self.bc,
            reference,
            self.degree,
            self.levels,
            self.options.tol,
            self.options.max_iter,
            self.options.preconditioner,
            self.csv.display(),
            svg,
            self.solution.display(),
            self.harmonic.display(),
        )
    }
}
