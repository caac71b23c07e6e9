//! C ABI for the emojirec engine.
//!
//! Every function returns an [`EmojirecStatus`]. On failure a message is
//! kept per thread and can be read with [`emojirec_last_error`]. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with [`emojirec_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, c_double, size_t};

use emojirec::{
    load_inventory, load_word_embeddings, Error, ImageQuery, Mode, Preprocessor, Recommender, Strategy,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmojirecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidInput = 4,
    EmptyQuery = 5,
    NoCandidates = 6,
    InvalidK = 7,
    Undefined = 8,
    Panic = 9,
}

/// Opaque engine handle.
pub struct EmojirecEngine {
    recommender: Recommender,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> EmojirecStatus {
    match err {
        Error::Io { .. } => EmojirecStatus::Io,
        Error::EmptyQuery => EmojirecStatus::EmptyQuery,
        Error::NoCandidates => EmojirecStatus::NoCandidates,
        Error::InvalidK => EmojirecStatus::InvalidK,
        _ => EmojirecStatus::InvalidInput,
    }
}

struct Fail(EmojirecStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EmojirecStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EmojirecStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EmojirecStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(EmojirecStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EmojirecStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn null(what: &str) -> Fail {
    Fail(EmojirecStatus::NullPointer, format!("{what} is null"))
}

/// Loads word embeddings and an inventory and creates an engine.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn emojirec_engine_open(
    embeddings_path: *const c_char,
    inventory_path: *const c_char,
    out: *mut *mut EmojirecEngine,
) -> EmojirecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let store = load_word_embeddings(text(embeddings_path, "embeddings_path")?, None)?;
        let inventory = load_inventory(text(inventory_path, "inventory_path")?)?;
        let engine = EmojirecEngine {
            recommender: Recommender::new(store, inventory, Preprocessor::default()),
        };
        *out = Box::into_raw(Box::new(engine));
        Ok(())
    })
}

/// # Safety
/// `engine` must come from [`emojirec_engine_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn emojirec_engine_free(engine: *mut EmojirecEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Embedding dimension, or 0 for a null handle.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn emojirec_engine_dimension(engine: *const EmojirecEngine) -> size_t {
    engine.as_ref().map_or(0, |e| e.recommender.store().dimension())
}

/// Ranks emojis for one query given as JSON (`{"classes": [...], "caption": "..."}`).
///
/// `strategy` is one of names, senses, definitions, processed_definitions;
/// `mode` is v or vt. On success `*out` holds a JSON object with the fields
/// id, mode, degraded and ranking.
///
/// # Safety
/// Strings must be NUL-terminated; `engine` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn emojirec_recommend_json(
    engine: *const EmojirecEngine,
    query_json: *const c_char,
    strategy: *const c_char,
    mode: *const c_char,
    k: size_t,
    out: *mut *mut c_char,
) -> EmojirecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let engine = engine.as_ref().ok_or_else(|| null("engine"))?;
        let query: ImageQuery = serde_json::from_str(text(query_json, "query_json")?)
            .map_err(|e| Fail(EmojirecStatus::InvalidInput, format!("query: {e}")))?;
        let strategy: Strategy = text(strategy, "strategy")?.parse()?;
        let mode: Mode = text(mode, "mode")?.parse()?;
        let rec = engine.recommender.recommend(&query, strategy, mode, k, None)?;
        let json = serde_json::json!({
            "id": query.id,
            "mode": rec.query.mode,
            "degraded": rec.query.degraded,
            "ranking": rec.ranking.entries,
        });
        let s = CString::new(json.to_string()).map_err(|e| Fail(EmojirecStatus::InvalidInput, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Cosine similarity of two vectors of length `len`. Returns
/// `Undefined` when either vector has zero norm.
///
/// # Safety
/// `a` and `b` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn emojirec_cosine(
    a: *const c_double,
    b: *const c_double,
    len: size_t,
    out: *mut c_double,
) -> EmojirecStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let a = std::slice::from_raw_parts(a, len);
        let b = std::slice::from_raw_parts(b, len);
        match emojirec::cosine(a, b)? {
            Some(c) => {
                *out = c;
                Ok(())
            }
            None => Err(Fail(EmojirecStatus::Undefined, "cosine undefined for a zero vector".into())),
        }
    })
}

/// Cohen's kappa between two label arrays of length `len`.
///
/// # Safety
/// `a` and `b` must point to `len` NUL-terminated strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn emojirec_cohen_kappa(
    a: *const *const c_char,
    b: *const *const c_char,
    len: size_t,
    out: *mut c_double,
) -> EmojirecStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let collect = |p: *const *const c_char, what: &str| -> Result<Vec<&str>, Fail> {
            std::slice::from_raw_parts(p, len).iter().map(|&s| text(s, what)).collect()
        };
        let la = collect(a, "a")?;
        let lb = collect(b, "b")?;
        *out = emojirec::cohen_kappa(&la, &lb)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn emojirec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn emojirec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
