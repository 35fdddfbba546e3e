#![no_main]

use level_forge::concepts::detect;
use level_forge::tiles::{parse_level, SCENE_HEIGHT};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(level) = parse_level("fuzz", text) else {
        return;
    };
    let grid = level.to_grid();
    let again = parse_level("fuzz", &grid.serialize()).expect("serialized level reparses");
    assert_eq!(again.to_grid(), grid);
    if grid.height() == SCENE_HEIGHT {
        let _ = detect(&grid);
    }
});
