#include <iostream>

#include <curl/curl.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  curl_global_init(CURL_GLOBAL_DEFAULT);
  const int rc = placebo::cli::run(argc, argv, std::cout, std::cerr);
  curl_global_cleanup();
  return rc;
}
