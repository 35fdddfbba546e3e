#![no_main]

use level_forge::project::LevelProject;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(project) = LevelProject::decode(text) {
        assert_eq!(LevelProject::decode(&project.encode()).unwrap(), project);
    }
});
