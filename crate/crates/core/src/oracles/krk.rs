//! KRK depth-of-win tablebase built by retrograde analysis.
//!
//! Depth counts White moves to mate with Black to move; 0 means Black is
//! already checkmated. Positions where White cannot force mate (stalemate,
//! an undefended rook, or a forced rook capture) are draws.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::encoding::{canonicalize_krk, enumerate_canonical_krk, KrkPosition};
use crate::error::{Error, Result};
use crate::oracles::Cost;

pub const MAGIC: &[u8; 6] = b"KRKTB1";
pub const CANONICAL_POSITIONS: usize = 28056;
pub const MAX_DEPTH: u8 = 16;
pub const DRAW_BYTE: u8 = 255;
const ABSENT: u8 = 254;

/// Reference depth histogram for depths 0..=16 over the canonical space.
pub const REFERENCE_DEPTH_COUNTS: [usize; 17] = [
    27, 78, 246, 81, 198, 471, 592, 683, 1433, 1712, 1985, 2854, 3597, 4194, 4553, 2166, 390,
];
pub const REFERENCE_DRAWS: usize = 2796;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KrkTablebase {
    /// Dense table over 18-bit position codes; `ABSENT` for non-canonical codes.
    table: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub depths: [usize; 17],
    pub draws: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.depths.iter().sum::<usize>() + self.draws
    }

    pub fn reference() -> Self {
        Histogram {
            depths: REFERENCE_DEPTH_COUNTS,
            draws: REFERENCE_DRAWS,
        }
    }

    /// Human-readable differences against `other`; empty when equal.
    pub fn diff(&self, other: &Histogram) -> Vec<String> {
        let mut out = Vec::new();
        for d in 0..17 {
            if self.depths[d] != other.depths[d] {
                out.push(format!("depth {d}: {} != {}", self.depths[d], other.depths[d]));
            }
        }
        if self.draws != other.draws {
            out.push(format!("draw: {} != {}", self.draws, other.draws));
        }
        if self.total() != other.total() {
            out.push(format!("total: {} != {}", self.total(), other.total()));
        }
        out
    }
}

// Board geometry over square indices `file * 8 + rank`.

#[inline]
fn file(sq: u8) -> i8 {
    (sq / 8) as i8
}

#[inline]
fn rank(sq: u8) -> i8 {
    (sq % 8) as i8
}

#[inline]
fn adjacent(a: u8, b: u8) -> bool {
    (file(a) - file(b)).abs() <= 1 && (rank(a) - rank(b)).abs() <= 1
}

const KING_STEPS: [(i8, i8); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
const ROOK_DIRS: [(i8, i8); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[inline]
fn offset(sq: u8, df: i8, dr: i8) -> Option<u8> {
    let f = file(sq) + df;
    let r = rank(sq) + dr;
    ((0..8).contains(&f) && (0..8).contains(&r)).then(|| (f * 8 + r) as u8)
}

/// Whether a rook on `rook` attacks `target`, with `blocker` the only other
/// occupied square that can interrupt the line.
fn rook_attacks(rook: u8, target: u8, blocker: u8) -> bool {
    if rook == target {
        return false;
    }
    let (df, dr) = (file(target) - file(rook), rank(target) - rank(rook));
    if df != 0 && dr != 0 {
        return false;
    }
    let step = (df.signum(), dr.signum());
    let mut sq = rook;
    loop {
        sq = offset(sq, step.0, step.1).expect("target lies on the line");
        if sq == target {
            return true;
        }
        if sq == blocker {
            return false;
        }
    }
}

#[inline]
fn index(wk: u8, wr: u8, bk: u8) -> usize {
    (wk as usize) << 12 | (wr as usize) << 6 | bk as usize
}

fn valid_black_to_move(wk: u8, wr: u8, bk: u8) -> bool {
    wk != wr && wk != bk && wr != bk && !adjacent(wk, bk)
}

fn valid_white_to_move(wk: u8, wr: u8, bk: u8) -> bool {
    valid_black_to_move(wk, wr, bk) && !rook_attacks(wr, bk, wk)
}

enum BlackMove {
    Capture,
    To(u8),
}

fn black_moves(wk: u8, wr: u8, bk: u8, out: &mut Vec<BlackMove>) {
    out.clear();
    for &(df, dr) in &KING_STEPS {
        let Some(dest) = offset(bk, df, dr) else { continue };
        if adjacent(dest, wk) {
            continue;
        }
        if dest == wr {
            out.push(BlackMove::Capture);
        } else if !rook_attacks(wr, dest, wk) {
            out.push(BlackMove::To(dest));
        }
    }
}

/// Successor black-to-move states of a white-to-move state, as (wk, wr).
fn white_moves(wk: u8, wr: u8, bk: u8, out: &mut Vec<(u8, u8)>) {
    out.clear();
    for &(df, dr) in &KING_STEPS {
        if let Some(dest) = offset(wk, df, dr) {
            if dest != wr && !adjacent(dest, bk) {
                out.push((dest, wr));
            }
        }
    }
    for &(df, dr) in &ROOK_DIRS {
        let mut sq = wr;
        while let Some(next) = offset(sq, df, dr) {
            if next == wk || next == bk {
                break;
            }
            out.push((wk, next));
            sq = next;
        }
    }
}

/// Retrograde analysis over the full position graph. Returns the depth of
/// every black-to-move state indexed by `index(wk, wr, bk)`, with
/// `DRAW_BYTE` for draws and invalid states.
fn solve_full() -> Vec<u8> {
    const N: usize = 1 << 18;
    const UNKNOWN: u8 = u8::MAX;
    let mut black = vec![UNKNOWN; N];
    let mut white = vec![UNKNOWN; N];
    let mut bm = Vec::with_capacity(8);
    let mut wm = Vec::with_capacity(24);

    // A black state is resolvable only if every reply stays on the board
    // with the rook; capture or stalemate options make it a draw for good.
    let mut candidate = vec![false; N];
    for wk in 0..64u8 {
        for wr in 0..64u8 {
            for bk in 0..64u8 {
                if !valid_black_to_move(wk, wr, bk) {
                    continue;
                }
                black_moves(wk, wr, bk, &mut bm);
                let idx = index(wk, wr, bk);
                if bm.is_empty() {
                    if rook_attacks(wr, bk, wk) {
                        black[idx] = 0;
                    }
                } else if bm.iter().all(|m| matches!(m, BlackMove::To(_))) {
                    candidate[idx] = true;
                }
            }
        }
    }

    let mut depth = 0u8;
    loop {
        depth += 1;
        // White to move wins in `depth` if some move reaches black depth - 1.
        let mut new_white = 0usize;
        for wk in 0..64u8 {
            for wr in 0..64u8 {
                for bk in 0..64u8 {
                    let idx = index(wk, wr, bk);
                    if white[idx] != UNKNOWN || !valid_white_to_move(wk, wr, bk) {
                        continue;
                    }
                    white_moves(wk, wr, bk, &mut wm);
                    if wm.iter().any(|&(k, r)| black[index(k, r, bk)] == depth - 1) {
                        white[idx] = depth;
                        new_white += 1;
                    }
                }
            }
        }
        // Black to move loses in `depth` if every move reaches a won white state.
        let mut new_black = 0usize;
        for wk in 0..64u8 {
            for wr in 0..64u8 {
                for bk in 0..64u8 {
                    let idx = index(wk, wr, bk);
                    if !candidate[idx] || black[idx] != UNKNOWN {
                        continue;
                    }
                    black_moves(wk, wr, bk, &mut bm);
                    let all_won = bm.iter().all(|m| match m {
                        BlackMove::To(dest) => white[index(wk, wr, *dest)] != UNKNOWN,
                        BlackMove::Capture => false,
                    });
                    if all_won {
                        black[idx] = depth;
                        new_black += 1;
                    }
                }
            }
        }
        if new_white == 0 && new_black == 0 {
            break;
        }
    }
    black.iter_mut().for_each(|v| {
        if *v == UNKNOWN {
            *v = DRAW_BYTE;
        }
    });
    black
}

impl KrkTablebase {
    pub fn build() -> Self {
        let full = solve_full();
        let mut table = vec![ABSENT; 1 << 18];
        for pos in enumerate_canonical_krk() {
            let (wk, wr, bk) = pos.squares();
            table[pos.code() as usize] = full[index(wk, wr, bk)];
        }
        KrkTablebase { table }
    }

    pub fn len(&self) -> usize {
        self.table.iter().filter(|&&v| v != ABSENT).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn byte_to_cost(b: u8) -> Cost {
        if b == DRAW_BYTE {
            Cost::Draw
        } else {
            Cost::Value(b as u32)
        }
    }

    /// Canonical positions with their costs, in ascending code order.
    pub fn entries(&self) -> impl Iterator<Item = (KrkPosition, Cost)> + '_ {
        self.table.iter().enumerate().filter(|(_, &v)| v != ABSENT).map(|(c, &v)| {
            (
                KrkPosition::from_code(c as u32).expect("code in range"),
                Self::byte_to_cost(v),
            )
        })
    }

    pub fn cost(&self, pos: &KrkPosition) -> Result<Cost> {
        let c = canonicalize_krk(pos)?;
        Ok(self.cost_canonical(&c))
    }

    /// Lookup without canonicalising; `pos` must already be canonical.
    pub fn cost_canonical(&self, pos: &KrkPosition) -> Cost {
        let b = self.table[pos.code() as usize];
        debug_assert_ne!(b, ABSENT, "position {pos} is not canonical");
        Self::byte_to_cost(b)
    }

    pub fn histogram(&self) -> Histogram {
        let mut h = Histogram {
            depths: [0; 17],
            draws: 0,
        };
        for &b in &self.table {
            match b {
                ABSENT => {}
                DRAW_BYTE => h.draws += 1,
                d => h.depths[d as usize] += 1,
            }
        }
        h
    }

    /// Canonical positions with cost exactly zero (Black checkmated).
    pub fn optimal_set(&self) -> Vec<KrkPosition> {
        self.entries()
            .filter(|(_, c)| *c == Cost::Value(0))
            .map(|(p, _)| p)
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MAGIC.len() + CANONICAL_POSITIONS * 5);
        out.extend_from_slice(MAGIC);
        for (code, &b) in self.table.iter().enumerate() {
            if b != ABSENT {
                out.extend_from_slice(&(code as u32).to_le_bytes());
                out.push(b);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Corrupt("missing KRKTB1 magic".into()));
        }
        let body = &bytes[MAGIC.len()..];
        if body.len() != CANONICAL_POSITIONS * 5 {
            return Err(Error::Corrupt(format!(
                "expected {} entries, found {} bytes of payload",
                CANONICAL_POSITIONS,
                body.len()
            )));
        }
        let mut table = vec![ABSENT; 1 << 18];
        for chunk in body.chunks_exact(5) {
            let code = u32::from_le_bytes(chunk[..4].try_into().expect("4 bytes"));
            let cost = chunk[4];
            let pos = KrkPosition::from_code(code).map_err(|e| Error::Corrupt(e.to_string()))?;
            if canonicalize_krk(&pos).ok() != Some(pos) {
                return Err(Error::Corrupt(format!("entry {pos} is not a canonical legal position")));
            }
            if cost > MAX_DEPTH && cost != DRAW_BYTE {
                return Err(Error::Corrupt(format!("entry {pos} has cost byte {cost}")));
            }
            if table[code as usize] != ABSENT {
                return Err(Error::Corrupt(format!("duplicate entry {pos}")));
            }
            table[code as usize] = cost;
        }
        Ok(KrkTablebase { table })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Loads the file at `path`, building and saving it first if absent.
    pub fn load_or_build(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            let tb = Self::build();
            tb.save(path)?;
            Ok(tb)
        }
    }
}

/// Fraction of the canonical space with finite cost at most `theta`.
pub fn baseline_fraction(tb: &KrkTablebase, theta: f64) -> f64 {
    let h = tb.histogram();
    let good: usize = h
        .depths
        .iter()
        .enumerate()
        .filter(|(d, _)| (*d as f64) <= theta)
        .map(|(_, c)| c)
        .sum();
    good as f64 / h.total() as f64
}
