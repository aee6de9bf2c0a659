#![no_main]

use libfuzzer_sys::fuzz_target;
use mrsbo_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        // Derived views must fail with errors, never panic.
        if let Ok(strategy) = cfg.strategy() {
            let _ = cfg.search_space(strategy.scheme);
        }
        let _ = cfg.bo_config();
        let _ = cfg.train_config();
        let _ = cfg.normalize();
    }
});
