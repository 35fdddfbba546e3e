#![no_main]

use level_forge::protocol::{validate_response, GenRequest, GenResponse};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(response) = serde_json::from_slice::<GenResponse>(data) else {
        return;
    };
    let mut request = GenRequest::new(response.id.clone(), "full floor.");
    request.num_samples = response.scenes.len().max(1) as u32;
    if let Ok(scenes) = validate_response(&request, response) {
        assert_eq!(scenes.len(), request.num_samples as usize);
    }
});
