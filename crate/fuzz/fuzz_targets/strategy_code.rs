#![no_main]

use libfuzzer_sys::fuzz_target;
use mrsbo::Strategy;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(strategy) = text.parse::<Strategy>() {
        let code = strategy.to_string();
        assert_eq!(code.len(), 4);
        assert_eq!(code.parse::<Strategy>().unwrap(), strategy);
    }
});
