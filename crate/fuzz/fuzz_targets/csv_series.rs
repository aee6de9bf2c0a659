#![no_main]

use libfuzzer_sys::fuzz_target;
use mrsbo::data::read_csv;

fuzz_target!(|data: &[u8]| {
    let Some((&flags, body)) = data.split_first() else {
        return;
    };
    let delimiter = if flags & 1 == 0 { b',' } else { b';' };
    let has_header = flags & 2 != 0;
    if let Ok(ts) = read_csv(body, delimiter, has_header) {
        assert_eq!(ts.names.len(), ts.n_features());
        assert!(ts.values.iter().all(|v| v.is_finite()));
        assert!(!ts.targets.is_empty());
    }
});
