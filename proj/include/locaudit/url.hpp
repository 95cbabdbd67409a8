#pragma once

#include <string>
#include <string_view>

namespace locaudit {

// "http://host:8080/v1/x" -> {"http://host:8080", "/v1/x"}. Path defaults to "/".
struct SplitUrl {
    std::string base;
    std::string path;
};

SplitUrl split_url(std::string_view url);

}  // namespace locaudit
