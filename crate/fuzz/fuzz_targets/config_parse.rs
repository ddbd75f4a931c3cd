#![no_main]

use libfuzzer_sys::fuzz_target;
use wellmirror::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        // anything accepted must echo to a config that parses back identically
        let echo = cfg.to_toml_string();
        let again = RunConfig::from_toml_str(&echo).expect("echo parses");
        assert_eq!(again.to_toml_string(), echo);
        let _ = cfg.validate();
    }
});
