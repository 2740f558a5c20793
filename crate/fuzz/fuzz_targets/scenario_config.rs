#![no_main]

use bandswitch::config::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_json(text) else { return };
    let _ = cfg.scene().validate();
    let _ = cfg.ue_count();
    let json = serde_json::to_string(&cfg).expect("serialize");
    assert_eq!(ScenarioConfig::from_json(&json).expect("reparse"), cfg);
});
