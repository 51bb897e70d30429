#pragma once

#include <map>
#include <string>
#include <vector>

namespace minirank {

struct MinedExample {
    std::string query_id;
    std::string positive_id;
    std::vector<std::string> negative_ids;
    std::map<std::string, double> teacher_scores;  // id -> teacher similarity
};

} // namespace minirank
