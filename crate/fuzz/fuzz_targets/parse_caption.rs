#![no_main]

use level_forge::caption::{parse_caption, CaptionStyle};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for style in CaptionStyle::ALL {
        if let Ok(caption) = parse_caption(text, style) {
            assert_eq!(parse_caption(&caption.text(), style).as_ref(), Ok(&caption));
        }
    }
});
