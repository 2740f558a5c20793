#![no_main]

use bandswitch::dataset::{read_channel_file, write_channel_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(file) = read_channel_file(data) else { return };
    // Anything accepted must survive a write/read cycle unchanged.
    let mut buf = Vec::new();
    write_channel_file(&mut buf, &file.header, &file.samples).expect("write accepted file");
    let back = read_channel_file(buf.as_slice()).expect("re-read written file");
    assert_eq!(back, file);
});
