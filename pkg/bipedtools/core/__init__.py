# -*- coding:utf-8 -*-
# /usr/bin/env python
