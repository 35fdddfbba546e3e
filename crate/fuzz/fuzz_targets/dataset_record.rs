#![no_main]

use level_forge::dataset::decode_record;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = decode_record(line) {
        let encoded = serde_json::to_string(&record).unwrap();
        assert_eq!(decode_record(&encoded).unwrap(), record);
    }
});
