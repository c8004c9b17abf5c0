//! C ABI over the `zrc` evaluation toolkit.
//!
//! Every fallible entry point returns a [`ZrcStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and
//! can be read with [`zrc_last_error`]. Strings handed out by the library
//! must be released with [`zrc_string_free`], corpora with
//! [`zrc_corpus_free`].

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use zrc::abx::{self, AbxConfig, Mode};
use zrc::bitrate::{self, SymbolSequence};
use zrc::corpus::{FrameSlice, GoldCorpus};
use zrc::dissim::{self, DissimKind, Normalization};
use zrc::lmeval::{self, ContrastPair, Pooling};
use zrc::{cli, tde, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZrcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    /// The inputs leave the metric undefined (no cells, no pairs, ...).
    Undefined = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZrcAbxMode {
    Within = 0,
    Across = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZrcDissim {
    Angular = 0,
    SymmetricKl = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZrcNorm {
    PathLength = 0,
    MaxLength = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZrcAbxScore {
    pub error_rate: f64,
    pub cells: u64,
    pub skipped_cells: u64,
    pub dropped_items: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZrcPrf {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZrcTdeScore {
    pub ned: f64,
    pub coverage: f64,
    pub grouping: ZrcPrf,
    pub type_: ZrcPrf,
    pub token: ZrcPrf,
    pub boundary: ZrcPrf,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZrcBitrate {
    pub bits_per_second: f64,
    pub entropy: f64,
    pub tokens: u64,
    pub types: u64,
}

/// A loaded gold corpus.
pub struct ZrcCorpus {
    inner: GoldCorpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ZrcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Io { .. } => ZrcStatus::Io,
            Error::MalformedLine { .. }
            | Error::Overlap { .. }
            | Error::BoundaryMismatch { .. }
            | Error::DimMismatch { .. }
            | Error::NonMonotonicTime { .. }
            | Error::EmptyFile
            | Error::DuplicateId(_)
            | Error::Json(_) => ZrcStatus::Parse,
            Error::NoCells
            | Error::DegenerateCell
            | Error::NoValidPairs
            | Error::EmptyDiscoverablePart
            | Error::EmptyInput
            | Error::ZeroDuration
            | Error::EmptyPairSet
            | Error::ConstantInput => ZrcStatus::Undefined,
            _ => ZrcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: ZrcStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            ZrcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            ZrcStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(fail(ZrcStatus::NullPointer, format!("{name} is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ZrcStatus::InvalidUtf8, format!("{name} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(ZrcStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(ZrcStatus::NullPointer, format!("{name} is null")))
}

unsafe fn corpus_arg<'a>(c: *const ZrcCorpus) -> Result<&'a GoldCorpus, Failure> {
    c.as_ref()
        .map(|c| &c.inner)
        .ok_or_else(|| fail(ZrcStatus::NullPointer, "corpus is null"))
}

fn kind_of(d: ZrcDissim) -> DissimKind {
    match d {
        ZrcDissim::Angular => DissimKind::Angular,
        ZrcDissim::SymmetricKl => DissimKind::SymmetricKl,
    }
}

fn prf(p: tde::Prf) -> ZrcPrf {
    ZrcPrf {
        precision: p.precision,
        recall: p.recall,
        fscore: p.fscore,
    }
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. The pointer stays valid until the next call into the
/// library on the same thread.
#[no_mangle]
pub extern "C" fn zrc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zrc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a corpus directory into `*out`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn zrc_corpus_load(
    dir: *const c_char,
    out: *mut *mut ZrcCorpus,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let dir = path_arg(dir, "dir")?;
        let inner = GoldCorpus::load_dir(&dir)?;
        *out = Box::into_raw(Box::new(ZrcCorpus { inner }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be NULL or a handle from [`zrc_corpus_load`], not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn zrc_corpus_free(corpus: *mut ZrcCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of utterances, 0 for a NULL handle.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zrc_corpus_utterances(corpus: *const ZrcCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.len())
}

/// Number of triphone ABX items, 0 for a NULL handle.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zrc_corpus_items(corpus: *const ZrcCorpus) -> usize {
    corpus
        .as_ref()
        .map_or(0, |c| abx::extract_items(&c.inner, &BTreeSet::new()).len())
}

/// ABX error rate of the features in `features_dir` (one `<utt>.txt` per
/// utterance).
///
/// # Safety
/// `corpus` must be a live handle, `features_dir` a NUL-terminated string
/// and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn zrc_abx_run(
    corpus: *const ZrcCorpus,
    features_dir: *const c_char,
    mode: ZrcAbxMode,
    dissim: ZrcDissim,
    norm: ZrcNorm,
    out: *mut ZrcAbxScore,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let corpus = corpus_arg(corpus)?;
        let dir = path_arg(features_dir, "features_dir")?;
        let mode = match mode {
            ZrcAbxMode::Within => Mode::Within,
            ZrcAbxMode::Across => Mode::Across,
        };
        let mut config = AbxConfig::new(mode, kind_of(dissim));
        config.norm = match norm {
            ZrcNorm::PathLength => Normalization::PathLength,
            ZrcNorm::MaxLength => Normalization::MaxLength,
        };
        let r = abx::run_abx(corpus, &dir, &config)?;
        *out = ZrcAbxScore {
            error_rate: r.error_rate,
            cells: r.cells as u64,
            skipped_cells: r.skipped_cells as u64,
            dropped_items: r.dropped_items as u64,
        };
        Ok(())
    })
}

/// Term discovery scores of a class file.
///
/// # Safety
/// `corpus` must be a live handle, `class_file` a NUL-terminated string
/// and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn zrc_tde_run(
    corpus: *const ZrcCorpus,
    class_file: *const c_char,
    out: *mut ZrcTdeScore,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let corpus = corpus_arg(corpus)?;
        let path = path_arg(class_file, "class_file")?;
        let r = tde::run_tde_file(&path, corpus)?;
        *out = ZrcTdeScore {
            ned: r.ned,
            coverage: r.coverage,
            grouping: prf(r.grouping),
            type_: prf(r.types),
            token: prf(r.token),
            boundary: prf(r.boundary),
        };
        Ok(())
    })
}

/// Bitrate of one stream of integer unit ids spanning `duration` seconds.
///
/// # Safety
/// `units` must point to `len` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn zrc_bitrate(
    units: *const u32,
    len: usize,
    duration: f64,
    out: *mut ZrcBitrate,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let units = slice_arg(units, len, "units")?;
        let seq = SymbolSequence {
            utterance_id: "stream".into(),
            symbols: units.iter().map(u32::to_string).collect(),
            duration,
        };
        let b = bitrate::bitrate(&[seq])?;
        *out = ZrcBitrate {
            bits_per_second: b.bits_per_second,
            entropy: b.entropy,
            tokens: b.tokens,
            types: b.types as u64,
        };
        Ok(())
    })
}

/// Share of pairs with `legal[i] > illegal[i]`, ties counting one half.
///
/// # Safety
/// Both arrays must hold `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn zrc_contrastive_accuracy(
    legal: *const f64,
    illegal: *const f64,
    len: usize,
    out: *mut f64,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let legal = slice_arg(legal, len, "legal")?;
        let illegal = slice_arg(illegal, len, "illegal")?;
        let mut scores = BTreeMap::new();
        let mut pairs = Vec::with_capacity(len);
        for (i, (&a, &b)) in legal.iter().zip(illegal).enumerate() {
            let (l, r) = (format!("{i}+"), format!("{i}-"));
            scores.insert(l.clone(), a);
            scores.insert(r.clone(), b);
            pairs.push(ContrastPair {
                pair_id: i.to_string(),
                legal: l,
                illegal: r,
            });
        }
        *out = lmeval::contrastive_accuracy(&pairs, &scores)?;
        Ok(())
    })
}

/// Spearman rank correlation, average ranks for ties.
///
/// # Safety
/// Both arrays must hold `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn zrc_spearman(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out: *mut f64,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = lmeval::spearman(slice_arg(xs, len, "xs")?, slice_arg(ys, len, "ys")?)?;
        Ok(())
    })
}

/// Angular dissimilarity of two `dim`-vectors, in [0, 1].
///
/// # Safety
/// Both arrays must hold `dim` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn zrc_angular(
    u: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = dissim::angular(slice_arg(u, dim, "u")?, slice_arg(v, dim, "v")?);
        Ok(())
    })
}

/// DTW-averaged dissimilarity of two row-major frame matrices.
///
/// # Safety
/// `a` must hold `a_rows * dim` values, `b` `b_rows * dim`, and `out` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn zrc_dtw(
    a: *const f64,
    a_rows: usize,
    b: *const f64,
    b_rows: usize,
    dim: usize,
    dissim: ZrcDissim,
    norm: ZrcNorm,
    out: *mut f64,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if dim == 0 {
            return Err(fail(ZrcStatus::InvalidArgument, "dim must be positive"));
        }
        let len = |rows: usize| {
            rows.checked_mul(dim)
                .ok_or_else(|| fail(ZrcStatus::InvalidArgument, "size overflow"))
        };
        let a = FrameSlice::from_rows(dim, slice_arg(a, len(a_rows)?, "a")?);
        let b = FrameSlice::from_rows(dim, slice_arg(b, len(b_rows)?, "b")?);
        let norm = match norm {
            ZrcNorm::PathLength => Normalization::PathLength,
            ZrcNorm::MaxLength => Normalization::MaxLength,
        };
        *out = dissim::dtw_dissim_with(a, b, kind_of(dissim), norm)?;
        Ok(())
    })
}

/// Scores a submission directory against a corpus directory and writes
/// the JSON report to `*out_json` (free with [`zrc_string_free`]).
///
/// # Safety
/// `corpus_dir` and `submission_dir` must be NUL-terminated strings and
/// `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn zrc_evaluate_all(
    corpus_dir: *const c_char,
    submission_dir: *const c_char,
    dissim: ZrcDissim,
    percent: bool,
    out_json: *mut *mut c_char,
) -> ZrcStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = std::ptr::null_mut();
        let corpus = path_arg(corpus_dir, "corpus_dir")?;
        let submission = path_arg(submission_dir, "submission_dir")?;
        let mut report = cli::evaluate_all(&corpus, &submission, kind_of(dissim), Pooling::Mean)?;
        report.version = Some(env!("CARGO_PKG_VERSION").into());
        let json = CString::new(report.to_json(percent))
            .map_err(|_| fail(ZrcStatus::Parse, "NUL in report"))?;
        *out = json.into_raw();
        Ok(())
    })
}
