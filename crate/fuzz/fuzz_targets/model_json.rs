#![no_main]

use bandswitch::learner::{FeatureRow, TrainedModel, NUM_FEATURES};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = TrainedModel::from_json(text) else { return };
    let row = FeatureRow { x: [1.0; NUM_FEATURES], y: false };
    if let Ok(p) = model.predict(&[row]) {
        assert_eq!(p.labels.len(), 1);
    }
    let again = TrainedModel::from_json(&model.to_json().expect("serialize")).expect("reparse");
    assert_eq!(again, model);
});
