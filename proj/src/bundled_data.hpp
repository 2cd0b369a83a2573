#pragma once

#include <string_view>

namespace emprobe::bundled {

extern const std::string_view scenarios_jsonl;
extern const std::string_view ablation_lexicon;
extern const std::string_view grade_empathy_lexicon;
extern const std::string_view grade_task_lexicon;

} // namespace emprobe::bundled
