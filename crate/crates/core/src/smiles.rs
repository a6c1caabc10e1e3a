//! Grammar-level SMILES tokenizer and validator.
//!
//! This is a syntactic pre-check only: no valence, aromaticity perception or
//! stereo consistency. It accepts the OpenSMILES token set (organic subset,
//! bracket atoms, bonds, ring closures including `%nn`, branches and dots).

use std::collections::HashMap;

use serde::Serialize;

pub const MAX_LEN: usize = 10_000;

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

const BRACKET_AROMATIC: &[&str] = &["se", "as", "te", "b", "c", "n", "o", "p", "s"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BracketAtom {
    pub isotope: Option<u16>,
    pub symbol: String,
    pub chirality: Option<String>,
    pub hydrogens: u8,
    pub charge: i8,
    pub class: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    OrganicAtom,
    BracketAtom(BracketAtom),
    Bond,
    RingBond(u8),
    BranchOpen,
    BranchClose,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmilesToken<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("empty input")]
    Empty,
    #[error("input is {0} bytes, limit is {MAX_LEN}")]
    TooLong(usize),
    #[error("unexpected character {ch:?} at byte {position}")]
    UnknownChar { ch: char, position: usize },
    #[error("bracket atom opened at byte {position} is not terminated")]
    UnterminatedBracket { position: usize },
    #[error("malformed bracket atom at byte {position}: {reason}")]
    MalformedBracket { position: usize, reason: String },
    #[error("'%' ring closure at byte {position} needs two digits")]
    BadRingNumber { position: usize },
}

impl TokenizeError {
    pub fn position(&self) -> usize {
        match self {
            Self::Empty | Self::TooLong(_) => 0,
            Self::UnknownChar { position, .. }
            | Self::UnterminatedBracket { position }
            | Self::MalformedBracket { position, .. }
            | Self::BadRingNumber { position } => *position,
        }
    }
}

/// Splits a SMILES string into tokens. Context-free: `C(((` tokenizes fine.
pub fn tokenize(smiles: &str) -> Result<Vec<SmilesToken<'_>>, TokenizeError> {
    if smiles.is_empty() {
        return Err(TokenizeError::Empty);
    }
    if smiles.len() > MAX_LEN {
        return Err(TokenizeError::TooLong(smiles.len()));
    }
    let bytes = smiles.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let kind = match bytes[i] {
            b'B' | b'C'
                if matches!(
                    (bytes[i], bytes.get(i + 1)),
                    (b'B', Some(b'r')) | (b'C', Some(b'l'))
                ) =>
            {
                i += 2;
                TokenKind::OrganicAtom
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' | b'b' | b'c' | b'n' | b'o'
            | b'p' | b's' | b'*' => {
                i += 1;
                TokenKind::OrganicAtom
            }
            b'[' => {
                let close = smiles[i..]
                    .find(']')
                    .ok_or(TokenizeError::UnterminatedBracket { position: i })?;
                let atom = parse_bracket(&smiles[i + 1..i + close], i)?;
                i += close + 1;
                TokenKind::BracketAtom(atom)
            }
            b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' => {
                i += 1;
                TokenKind::Bond
            }
            d @ b'0'..=b'9' => {
                i += 1;
                TokenKind::RingBond(d - b'0')
            }
            b'%' => match (bytes.get(i + 1), bytes.get(i + 2)) {
                (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                    i += 3;
                    TokenKind::RingBond((a - b'0') * 10 + (b - b'0'))
                }
                _ => return Err(TokenizeError::BadRingNumber { position: i }),
            },
            b'(' => {
                i += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                i += 1;
                TokenKind::BranchClose
            }
            b'.' => {
                i += 1;
                TokenKind::Dot
            }
            _ => {
                let ch = smiles[i..].chars().next().expect("in bounds");
                return Err(TokenizeError::UnknownChar { ch, position: i });
            }
        };
        tokens.push(SmilesToken {
            kind,
            text: &smiles[start..i],
            position: start,
        });
    }
    Ok(tokens)
}

fn parse_bracket(body: &str, position: usize) -> Result<BracketAtom, TokenizeError> {
    let bad = |reason: &str| TokenizeError::MalformedBracket {
        position,
        reason: reason.to_owned(),
    };
    let b = body.as_bytes();
    let mut i = 0;

    let digits = |i: &mut usize| {
        let s = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        &body[s..*i]
    };

    let iso = digits(&mut i);
    let isotope = if iso.is_empty() {
        None
    } else {
        Some(
            iso.parse::<u16>()
                .map_err(|_| bad("isotope out of range"))?,
        )
    };

    let rest = &body[i..];
    let symbol = if rest.starts_with('*') {
        "*"
    } else if let Some(a) = BRACKET_AROMATIC.iter().find(|a| rest.starts_with(**a)) {
        a
    } else {
        let two = rest.get(..2).filter(|s| ELEMENTS.contains(s));
        let one = rest.get(..1).filter(|s| ELEMENTS.contains(s));
        two.or(one).ok_or_else(|| bad("unknown element symbol"))?
    };
    i += symbol.len();

    let mut chirality = None;
    if i < b.len() && b[i] == b'@' {
        let s = i;
        i += 1;
        if i < b.len() && b[i] == b'@' {
            i += 1;
        } else if let Some(cls) = ["TH", "AL", "SP", "TB", "OH"]
            .iter()
            .find(|c| body[i..].starts_with(**c))
        {
            i += cls.len();
            if digits(&mut i).is_empty() {
                return Err(bad("chirality class needs a number"));
            }
        }
        chirality = Some(body[s..i].to_owned());
    }

    let mut hydrogens = 0;
    if i < b.len() && b[i] == b'H' {
        i += 1;
        hydrogens = match digits(&mut i) {
            "" => 1,
            n => n.parse().map_err(|_| bad("hydrogen count out of range"))?,
        };
    }

    let mut charge: i8 = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        let sign: i8 = if b[i] == b'+' { 1 } else { -1 };
        let sym = b[i];
        i += 1;
        let mut magnitude: i8 = 1;
        if i < b.len() && b[i] == sym {
            while i < b.len() && b[i] == sym {
                magnitude += 1;
                i += 1;
            }
        } else {
            let n = digits(&mut i);
            if !n.is_empty() {
                magnitude = n.parse().map_err(|_| bad("charge out of range"))?;
            }
        }
        if magnitude > 15 {
            return Err(bad("charge out of range"));
        }
        charge = sign * magnitude;
    }

    let mut class = None;
    if i < b.len() && b[i] == b':' {
        i += 1;
        let n = digits(&mut i);
        if n.is_empty() {
            return Err(bad("atom class needs a number"));
        }
        class = Some(n.parse().map_err(|_| bad("atom class out of range"))?);
    }

    if i != b.len() {
        return Err(bad(&format!("unexpected trailing {:?}", &body[i..])));
    }

    Ok(BracketAtom {
        isotope,
        symbol: symbol.to_owned(),
        chirality,
        hydrogens,
        charge,
        class,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub errors: Vec<Diagnostic>,
    /// Accepted but noteworthy constructs (wildcards, stereo markers).
    pub warnings: Vec<Diagnostic>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Prev {
    Start,
    Atom,
    Bond { after_atom: bool },
    Ring,
    BranchOpen,
    BranchClose,
    Dot,
}

/// Validates a SMILES string against the grammar, reporting every problem found.
pub fn validate(smiles: &str) -> ValidationReport {
    let tokens = match tokenize(smiles) {
        Ok(t) => t,
        Err(e) => {
            return ValidationReport {
                valid: false,
                errors: vec![Diagnostic {
                    position: e.position(),
                    message: e.to_string(),
                }],
                warnings: Vec::new(),
            }
        }
    };

    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut err = |position: usize, message: &str| {
        errors.push(Diagnostic {
            position,
            message: message.to_owned(),
        })
    };

    let mut prev = Prev::Start;
    let mut branches: Vec<usize> = Vec::new();
    // ring number -> (position of opening digit, atom index it opened on)
    let mut open_rings: HashMap<u8, (usize, usize)> = HashMap::new();
    let mut atom_count = 0usize;

    for tok in &tokens {
        let pos = tok.position;
        match &tok.kind {
            TokenKind::OrganicAtom | TokenKind::BracketAtom(_) => {
                if tok.text == "*" {
                    warnings.push(Diagnostic {
                        position: pos,
                        message: "wildcard atom".into(),
                    });
                }
                if let TokenKind::BracketAtom(a) = &tok.kind {
                    if a.symbol == "*" {
                        warnings.push(Diagnostic {
                            position: pos,
                            message: "wildcard atom".into(),
                        });
                    }
                    if a.chirality.is_some() {
                        warnings.push(Diagnostic {
                            position: pos,
                            message: "stereo marker not checked".into(),
                        });
                    }
                }
                atom_count += 1;
                prev = Prev::Atom;
            }
            TokenKind::Bond => {
                match prev {
                    Prev::Start => err(pos, "bond before any atom"),
                    Prev::Bond { .. } => err(pos, "two consecutive bonds"),
                    Prev::Dot => err(pos, "bond after '.'"),
                    _ => {}
                }
                prev = Prev::Bond {
                    after_atom: matches!(prev, Prev::Atom | Prev::Ring),
                };
            }
            TokenKind::RingBond(n) => {
                let ok = matches!(
                    prev,
                    Prev::Atom | Prev::Ring | Prev::Bond { after_atom: true }
                );
                if !ok {
                    err(pos, "ring closure digit must follow an atom");
                } else if let Some((_, opened_on)) = open_rings.remove(n) {
                    if opened_on == atom_count {
                        err(pos, "ring closure bonds an atom to itself");
                    }
                } else {
                    open_rings.insert(*n, (pos, atom_count));
                }
                prev = Prev::Ring;
            }
            TokenKind::BranchOpen => {
                if !matches!(prev, Prev::Atom | Prev::Ring | Prev::BranchClose) {
                    err(pos, "branch must follow an atom");
                }
                branches.push(pos);
                prev = Prev::BranchOpen;
            }
            TokenKind::BranchClose => {
                match prev {
                    Prev::Bond { .. } => err(pos, "dangling bond before ')'"),
                    Prev::BranchOpen => err(pos, "empty branch"),
                    Prev::Dot => err(pos, "'.' before ')'"),
                    _ => {}
                }
                if branches.pop().is_none() {
                    err(pos, "unbalanced ')'");
                }
                prev = Prev::BranchClose;
            }
            TokenKind::Dot => {
                if matches!(prev, Prev::Start | Prev::Bond { .. } | Prev::Dot) {
                    err(pos, "'.' must separate two components");
                }
                prev = Prev::Dot;
            }
        }
    }

    let end = smiles.len();
    match prev {
        Prev::Bond { .. } => err(end, "dangling bond at end of input"),
        Prev::Dot => err(end, "trailing '.'"),
        _ => {}
    }
    for pos in branches {
        err(pos, "unclosed '('");
    }
    let mut unmatched: Vec<_> = open_rings.into_iter().collect();
    unmatched.sort_by_key(|(_, (pos, _))| *pos);
    for (n, (pos, _)) in unmatched {
        err(pos, &format!("unmatched ring closure {n}"));
    }

    errors.sort_by_key(|d| d.position);
    ValidationReport {
        valid: errors.is_empty(),
        errors,
        warnings,
    }
}
