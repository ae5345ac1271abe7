//! C ABI for the tracker: opaque handles and integer error codes.

// Placeholder during bring-up; the full surface lands with the core API.
