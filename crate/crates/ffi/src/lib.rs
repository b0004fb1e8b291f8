//! C ABI for the foreign-object-intrusion engine.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns a [`FoiStatus`] and writes results through out
//! pointers. Strings returned by the library are NUL-terminated UTF-8 and
//! must be released with `foi_string_free`. Handles are not thread-safe;
//! callers serialize access per handle. The matching header (`include/foi.h`)
//! is generated by cbindgen at build time.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use foi_core::embedding::Embedding;
use foi_core::error::Error;
use foi_core::formats::{DetectionRecord, FrameDetections};
use foi_core::geometry::BoundingBox;
use foi_core::pipeline::{Session, SessionConfig};
use foi_core::store::ReferenceStore;
use foi_core::taxonomy::ClassLabel;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoiStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument violated the call contract.
    InvalidArgument = 3,
    /// Embedding dimensions disagreed.
    DimensionMismatch = 4,
    /// A zero-norm embedding was supplied.
    ZeroNorm = 5,
    /// The reference store holds no records.
    EmptyStore = 6,
    /// A record index was already taken.
    DuplicateIndex = 7,
    /// File IO failed.
    Io = 8,
    /// Input data failed to parse.
    Parse = 9,
    /// Frame indices did not increase strictly.
    OutOfOrderFrame = 10,
    /// A caller-provided buffer was too small.
    BufferTooSmall = 11,
    /// An internal invariant failed.
    Internal = 12,
}

impl From<&Error> for FoiStatus {
    fn from(err: &Error) -> Self {
        match err {
            Error::DimensionMismatch { .. } => FoiStatus::DimensionMismatch,
            Error::ZeroNorm => FoiStatus::ZeroNorm,
            Error::NonFinite(_) => FoiStatus::InvalidArgument,
            Error::InvalidBox { .. } => FoiStatus::InvalidArgument,
            Error::EmptyStore => FoiStatus::EmptyStore,
            Error::DuplicateIndex(_) => FoiStatus::DuplicateIndex,
            Error::UnmappedLabel(_) => FoiStatus::InvalidArgument,
            Error::InvalidArgument(_) => FoiStatus::InvalidArgument,
            Error::OutOfOrderFrame { .. } => FoiStatus::OutOfOrderFrame,
            Error::Parse { .. } => FoiStatus::Parse,
            Error::Io(_) => FoiStatus::Io,
        }
    }
}

/// Opaque reference-store handle.
pub struct FoiStore {
    inner: ReferenceStore,
}

/// Opaque tracking-session handle.
pub struct FoiSession {
    inner: Session,
}

fn guard<F: FnOnce() -> FoiStatus>(f: F) -> FoiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => FoiStatus::Internal,
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, FoiStatus> {
    if ptr.is_null() {
        return Err(FoiStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| FoiStatus::InvalidUtf8)
}

fn export_string(text: String, out: *mut *mut c_char) -> FoiStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            FoiStatus::Ok
        }
        Err(_) => FoiStatus::Internal,
    }
}

/// A short human-readable description of a status code. The returned string
/// is static; do not free it.
#[no_mangle]
pub extern "C" fn foi_status_message(status: FoiStatus) -> *const c_char {
    let text: &'static [u8] = match status {
        FoiStatus::Ok => b"ok\0",
        FoiStatus::NullArgument => b"null argument\0",
        FoiStatus::InvalidUtf8 => b"invalid utf-8\0",
        FoiStatus::InvalidArgument => b"invalid argument\0",
        FoiStatus::DimensionMismatch => b"dimension mismatch\0",
        FoiStatus::ZeroNorm => b"zero-norm embedding\0",
        FoiStatus::EmptyStore => b"empty store\0",
        FoiStatus::DuplicateIndex => b"duplicate record index\0",
        FoiStatus::Io => b"io error\0",
        FoiStatus::Parse => b"parse error\0",
        FoiStatus::OutOfOrderFrame => b"out-of-order frame\0",
        FoiStatus::BufferTooSmall => b"buffer too small\0",
        FoiStatus::Internal => b"internal error\0",
    };
    text.as_ptr() as *const c_char
}

/// Releases a string allocated by this library.
///
/// # Safety
/// `s` must be a pointer previously returned through an out parameter of
/// this library and not yet freed. NULL is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn foi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates an empty reference store for `dim`-component embeddings.
/// Returns NULL when `dim` is zero.
#[no_mangle]
pub extern "C" fn foi_store_new(dim: usize) -> *mut FoiStore {
    match ReferenceStore::new(dim) {
        Ok(inner) => Box::into_raw(Box::new(FoiStore { inner })),
        Err(_) => ptr::null_mut(),
    }
}

/// Loads a store snapshot from `path`, writing the handle to `out_store`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_store` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foi_store_load(
    path: *const c_char,
    out_store: *mut *mut FoiStore,
) -> FoiStatus {
    guard(|| {
        if out_store.is_null() {
            return FoiStatus::NullArgument;
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match ReferenceStore::load_path(path) {
            Ok(inner) => {
                *out_store = Box::into_raw(Box::new(FoiStore { inner }));
                FoiStatus::Ok
            }
            Err(e) => FoiStatus::from(&e),
        }
    })
}

/// Writes the store snapshot to `path`.
///
/// # Safety
/// `store` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn foi_store_save(
    store: *const FoiStore,
    path: *const c_char,
) -> FoiStatus {
    guard(|| {
        let store = match store.as_ref() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match store.inner.save_path(path) {
            Ok(()) => FoiStatus::Ok,
            Err(e) => FoiStatus::from(&e),
        }
    })
}

/// Appends a record; the embedding is normalized on ingestion. The assigned
/// index is written to `out_index` when it is non-NULL.
///
/// # Safety
/// `store` must be a live handle, `values` must point at `len` floats, and
/// `label`/`source_path` must be NUL-terminated strings (`source_path` may
/// be NULL for none).
#[no_mangle]
pub unsafe extern "C" fn foi_store_insert(
    store: *mut FoiStore,
    values: *const f32,
    len: usize,
    label: *const c_char,
    source_path: *const c_char,
    out_index: *mut u64,
) -> FoiStatus {
    guard(|| {
        let store = match store.as_mut() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        if values.is_null() {
            return FoiStatus::NullArgument;
        }
        let label = match cstr(label) {
            Ok(l) => l,
            Err(status) => return status,
        };
        let source = if source_path.is_null() {
            ""
        } else {
            match cstr(source_path) {
                Ok(s) => s,
                Err(status) => return status,
            }
        };
        let payload = std::slice::from_raw_parts(values, len);
        let embedding = match Embedding::from_f32(payload) {
            Ok(e) => e,
            Err(e) => return FoiStatus::from(&e),
        };
        let label = match ClassLabel::new(label) {
            Ok(l) => l,
            Err(e) => return FoiStatus::from(&e),
        };
        match store.inner.insert(&embedding, label, source) {
            Ok(index) => {
                if !out_index.is_null() {
                    *out_index = index;
                }
                FoiStatus::Ok
            }
            Err(e) => FoiStatus::from(&e),
        }
    })
}

/// Number of records in the store; 0 for a NULL handle.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foi_store_len(store: *const FoiStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

/// Embedding dimension of the store; 0 for a NULL handle.
///
/// # Safety
/// `store` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foi_store_dim(store: *const FoiStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.dim())
}

/// Classifies one query embedding: brute-force cosine scan, closest record
/// wins. Writes the record index and similarity, and copies the label into
/// `label_buf` (NUL-terminated) when the buffer is large enough.
///
/// # Safety
/// `store` must be a live handle, `query` must point at `len` floats, and
/// `label_buf` must point at `label_cap` writable bytes (or be NULL along
/// with `label_cap == 0`).
#[no_mangle]
pub unsafe extern "C" fn foi_store_classify(
    store: *const FoiStore,
    query: *const f32,
    len: usize,
    out_index: *mut u64,
    out_similarity: *mut f64,
    label_buf: *mut c_char,
    label_cap: usize,
) -> FoiStatus {
    guard(|| {
        let store = match store.as_ref() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        if query.is_null() {
            return FoiStatus::NullArgument;
        }
        let payload = std::slice::from_raw_parts(query, len);
        let embedding = match Embedding::from_f32(payload) {
            Ok(e) => e,
            Err(e) => return FoiStatus::from(&e),
        };
        let hit = match store.inner.classify(&embedding) {
            Ok(hit) => hit,
            Err(e) => return FoiStatus::from(&e),
        };
        if !out_index.is_null() {
            *out_index = hit.record_index;
        }
        if !out_similarity.is_null() {
            *out_similarity = hit.similarity;
        }
        if !label_buf.is_null() {
            let bytes = hit.label.as_str().as_bytes();
            if bytes.len() + 1 > label_cap {
                return FoiStatus::BufferTooSmall;
            }
            ptr::copy_nonoverlapping(bytes.as_ptr(), label_buf as *mut u8, bytes.len());
            *label_buf.add(bytes.len()) = 0;
        }
        FoiStatus::Ok
    })
}

/// Exact top-k retrieval. Writes up to `capacity` (index, similarity) pairs
/// and the produced count.
///
/// # Safety
/// `store` must be a live handle; `query` points at `len` floats;
/// `out_indices` and `out_similarities` point at `capacity` writable slots;
/// `out_count` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foi_store_nearest(
    store: *const FoiStore,
    query: *const f32,
    len: usize,
    k: usize,
    out_indices: *mut u64,
    out_similarities: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> FoiStatus {
    guard(|| {
        let store = match store.as_ref() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        if query.is_null() || out_indices.is_null() || out_similarities.is_null() || out_count.is_null() {
            return FoiStatus::NullArgument;
        }
        let payload = std::slice::from_raw_parts(query, len);
        let embedding = match Embedding::from_f32(payload) {
            Ok(e) => e,
            Err(e) => return FoiStatus::from(&e),
        };
        let hits = match store.inner.nearest(&embedding, k) {
            Ok(hits) => hits,
            Err(e) => return FoiStatus::from(&e),
        };
        if hits.len() > capacity {
            return FoiStatus::BufferTooSmall;
        }
        for (i, hit) in hits.iter().enumerate() {
            *out_indices.add(i) = hit.record_index;
            *out_similarities.add(i) = hit.similarity;
        }
        *out_count = hits.len();
        FoiStatus::Ok
    })
}

/// Releases a store handle. NULL is accepted and ignored.
///
/// # Safety
/// `store` must be NULL or a live handle not owned by a session.
#[no_mangle]
pub unsafe extern "C" fn foi_store_free(store: *mut FoiStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Creates a tracking session. The session takes ownership of `store`; the
/// handle must not be used or freed afterwards. `config_json` may be NULL
/// for defaults, or a JSON object with `tracker` (`iou_threshold`,
/// `feature_threshold`, `max_misses`, `buffer_size`), `zones` (array of
/// `{"name":..,"bounds":{"x_min":..,"y_min":..,"x_max":..,"y_max":..}}`),
/// and `approach_window`.
///
/// # Safety
/// `store` must be a live handle and `out_session` a valid pointer;
/// `config_json` must be NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn foi_session_new(
    store: *mut FoiStore,
    config_json: *const c_char,
    out_session: *mut *mut FoiSession,
) -> FoiStatus {
    guard(|| {
        if store.is_null() || out_session.is_null() {
            return FoiStatus::NullArgument;
        }
        let config = if config_json.is_null() {
            SessionConfig::default()
        } else {
            let text = match cstr(config_json) {
                Ok(t) => t,
                Err(status) => return status,
            };
            match serde_json::from_str::<SessionConfig>(text) {
                Ok(c) => c,
                Err(_) => return FoiStatus::Parse,
            }
        };
        let store = Box::from_raw(store);
        match Session::new(store.inner, config) {
            Ok(inner) => {
                *out_session = Box::into_raw(Box::new(FoiSession { inner }));
                FoiStatus::Ok
            }
            Err(e) => FoiStatus::from(&e),
        }
    })
}

/// Feeds one frame. `boxes` holds `count * 4` floats as
/// `[x_min, y_min, x_max, y_max]` per detection, `confidences` holds
/// `count` floats, and `embeddings` holds `count * dim` floats row by row.
/// When `out_events_json` is non-NULL it receives the frame's alert events
/// as line-delimited JSON (an empty string when there are none).
///
/// # Safety
/// `session` must be a live handle; array arguments must match the
/// documented lengths; `count == 0` permits NULL arrays.
#[no_mangle]
pub unsafe extern "C" fn foi_session_process_frame(
    session: *mut FoiSession,
    frame_index: u64,
    timestamp_ms: u64,
    boxes: *const f64,
    confidences: *const f64,
    embeddings: *const f32,
    count: usize,
    out_events_json: *mut *mut c_char,
) -> FoiStatus {
    guard(|| {
        let session = match session.as_mut() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        if count > 0 && (boxes.is_null() || confidences.is_null() || embeddings.is_null()) {
            return FoiStatus::NullArgument;
        }
        let dim = session.inner.store().dim();
        let mut detections = Vec::with_capacity(count);
        for i in 0..count {
            let b = std::slice::from_raw_parts(boxes.add(i * 4), 4);
            let bbox = match BoundingBox::new(b[0], b[1], b[2], b[3]) {
                Ok(bb) => bb,
                Err(e) => return FoiStatus::from(&e),
            };
            let confidence = *confidences.add(i);
            if !(0.0..=1.0).contains(&confidence) {
                return FoiStatus::InvalidArgument;
            }
            let row = std::slice::from_raw_parts(embeddings.add(i * dim), dim);
            let embedding = match Embedding::from_f32(row) {
                Ok(e) => e,
                Err(e) => return FoiStatus::from(&e),
            };
            detections.push(DetectionRecord::new(bbox, confidence, embedding));
        }
        let frame = FrameDetections {
            frame_index,
            timestamp_ms,
            detections,
        };
        match session.inner.process_frame(&frame) {
            Ok(step) => {
                if out_events_json.is_null() {
                    return FoiStatus::Ok;
                }
                let mut text = String::new();
                for event in &step.alerts {
                    text.push_str(&serde_json::to_string(event).expect("event serializes"));
                    text.push('\n');
                }
                export_string(text, out_events_json)
            }
            Err(e) => FoiStatus::from(&e),
        }
    })
}

/// Produces the per-track reports accumulated so far as line-delimited JSON.
///
/// # Safety
/// `session` must be a live handle and `out_reports_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foi_session_reports(
    session: *const FoiSession,
    out_reports_json: *mut *mut c_char,
) -> FoiStatus {
    guard(|| {
        let session = match session.as_ref() {
            Some(s) => s,
            None => return FoiStatus::NullArgument,
        };
        if out_reports_json.is_null() {
            return FoiStatus::NullArgument;
        }
        let mut text = String::new();
        for report in session.inner.finalize() {
            text.push_str(&serde_json::to_string(&report).expect("report serializes"));
            text.push('\n');
        }
        export_string(text, out_reports_json)
    })
}

/// Releases a session handle. NULL is accepted and ignored.
///
/// # Safety
/// `session` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foi_session_free(session: *mut FoiSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Cosine similarity between two `len`-component vectors, clamped to
/// [-1, 1]. Rejects zero-norm input.
///
/// # Safety
/// `a` and `b` must point at `len` floats and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn foi_cosine_similarity(
    a: *const f32,
    b: *const f32,
    len: usize,
    out: *mut f64,
) -> FoiStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return FoiStatus::NullArgument;
        }
        let left = match Embedding::from_f32(std::slice::from_raw_parts(a, len)) {
            Ok(e) => e,
            Err(e) => return FoiStatus::from(&e),
        };
        let right = match Embedding::from_f32(std::slice::from_raw_parts(b, len)) {
            Ok(e) => e,
            Err(e) => return FoiStatus::from(&e),
        };
        match foi_core::embedding::cosine_similarity(&left, &right) {
            Ok(value) => {
                *out = value;
                FoiStatus::Ok
            }
            Err(e) => FoiStatus::from(&e),
        }
    })
}
